use riplab::cli::{parse_config, Parsed};
use riplab::config::{parse_config_text, parse_count_list};
use riplab::{Experiment, ExperimentConfig, HarnessError};
use riplab_core::measurements::EnsembleKind;
use riplab_core::recovery::Solver;

fn run_config(args: &[&str]) -> Result<ExperimentConfig, HarnessError> {
    match parse_config(std::iter::once("riplab").chain(args.iter().copied()))? {
        Parsed::Run(cfg) => Ok(cfg),
        Parsed::Display(text) => panic!("unexpected display: {text}"),
    }
}

fn key_of(e: HarnessError) -> String {
    match e {
        HarnessError::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn ranges_expand() {
    let k = parse_count_list("K", "400:1500:100").unwrap();
    assert_eq!(k.len(), 12);
    assert_eq!((k[0], k[11]), (400, 1500));
    assert_eq!(parse_count_list("K", "10:25:10").unwrap(), vec![10, 20]);
    assert_eq!(parse_count_list("K", "200,600, 1000:1400:400").unwrap(), vec![200, 600, 1000, 1400]);
    assert!(parse_count_list("K", "5:1:1").is_err());
    assert!(parse_count_list("K", "1:2").is_err());
}

#[test]
fn selftest_defaults() {
    let cfg = run_config(&["selftest"]).unwrap();
    assert_eq!(cfg, ExperimentConfig::defaults(Experiment::Selftest));
    assert_eq!((cfg.m, cfg.n, cfg.r), (40, 80, 5));
    assert!(cfg.out.is_none());
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("riplab-config-{}.cfg", std::process::id()));
    std::fs::write(&path, "# desk scale\nM = 16\nN=24\ntrials=3\nsolver=altmin,gd\n\n").unwrap();
    let p = path.to_str().unwrap();
    let cfg = run_config(&["sweep", "--config", p, "--trials", "4", "--ensemble", "gaussian"]).unwrap();
    assert_eq!((cfg.m, cfg.n), (16, 24));
    assert_eq!(cfg.trials, 4);
    assert_eq!(cfg.solvers, vec![Solver::AltMin, Solver::Gd]);
    assert_eq!(cfg.ensembles, vec![EnsembleKind::Gaussian]);
    assert_eq!(cfg.k.len(), 12);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn malformed_values_name_the_key() {
    assert_eq!(key_of(run_config(&["sweep", "--trials", "0"]).unwrap_err()), "trials");
    assert_eq!(key_of(run_config(&["sweep", "--K", "4x"]).unwrap_err()), "K");
    assert_eq!(key_of(run_config(&["tailbound", "--alpha", "1.5"]).unwrap_err()), "alpha");
    assert_eq!(key_of(run_config(&["sweep", "--solver", "newton"]).unwrap_err()), "solver");
    assert_eq!(key_of(run_config(&["sweep", "--M", "3", "--r", "5"]).unwrap_err()), "r");
    assert_eq!(key_of(run_config(&["sweep", "--rho=-1"]).unwrap_err()), "rho");
    assert_eq!(key_of(parse_config_text("M=4\nwidth=3\n").unwrap_err()), "width");
    assert_eq!(key_of(parse_config_text("M 4\n").unwrap_err()), "config");
    assert!(matches!(run_config(&["sweep", "--bogus", "1"]), Err(HarnessError::Usage(_))));
    assert!(matches!(run_config(&["nothing"]), Err(HarnessError::Usage(_))));
}

#[test]
fn echo_lists_every_key() {
    let cfg = run_config(&["concentration", "--K", "200,1400", "--seed", "7"]).unwrap();
    let echo = cfg.echo();
    assert!(echo.contains("K=200,1400\n"));
    assert!(echo.contains("seed=7\n"));
    assert_eq!(echo.lines().count(), riplab::config::KEYS.len());
}
