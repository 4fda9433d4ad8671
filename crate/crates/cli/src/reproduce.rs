//! Anchored reference values and the checks that reproduce them.

use std::time::Instant;

use realq::moment::{real_bound, RealBoundOptions, RelaxationLevel};
use realq::search::{evaluate, refine, survey, ScanConfig, SurveyConfig, SurveySummary};
use realq::sdp::SolveStatus;
use realq::witness::{
    classical_bound, column_norm_sum, complex_bound_family, optimize_settings, FMatrix, FamilyParams,
    SignTable,
};
use serde::{Deserialize, Serialize};

use crate::config::Config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub description: String,
    pub expected: String,
    pub achieved: f64,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    /// Minutes rather than seconds.
    pub slow: bool,
    run: fn(&Config) -> (String, f64, bool, String),
}

impl Check {
    pub fn run(&self, cfg: &Config) -> CheckResult {
        let t = Instant::now();
        let (expected, achieved, pass, detail) = (self.run)(cfg);
        CheckResult {
            id: self.id.to_string(),
            description: self.description.to_string(),
            expected,
            achieved,
            pass,
            detail,
            seconds: t.elapsed().as_secs_f64(),
        }
    }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn opts(cfg: &Config, level: usize) -> RealBoundOptions {
    RealBoundOptions {
        level: RelaxationLevel::uniform(level).expect("supported level"),
        ppt: cfg.ppt,
        use_symmetry: cfg.use_symmetry,
        tolerances: cfg.tolerances,
    }
}

fn fr(cfg: &Config, f: &FMatrix, level: usize, target: f64, tol: f64) -> (String, f64, bool, String) {
    match real_bound(f, &SignTable::RESOLVED, &opts(cfg, level)) {
        Ok(r) => (
            format!("{target} ± {tol}"),
            r.value,
            r.status == SolveStatus::Optimal && within(r.value, target, tol),
            format!("status {:?}, gap {:.2e}, {} variables", r.status, r.relative_gap, r.n_vars),
        ),
        Err(e) => (format!("{target} ± {tol}"), f64::NAN, false, e.to_string()),
    }
}

fn construction_detail(f: &FMatrix, cfg: &Config, bound: f64) -> (bool, String) {
    let s = optimize_settings(f, &SignTable::RESOLVED, &cfg.optimizer);
    (
        (s.value - bound).abs() <= 1e-6,
        format!("construction attains {:.12}", s.value),
    )
}

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "fc-12",
            description: "classical bound of [[-2,3,3],[3,-2,3],[3,3,-2]]",
            slow: false,
            run: |_| {
                let v = classical_bound(&FMatrix::example_f1()).value;
                ("12".into(), v, v == 12.0, String::new())
            },
        },
        Check {
            id: "fc-2sqrt3",
            description: "classical bound of the tetrahedron witness",
            slow: false,
            run: |_| {
                let v = classical_bound(&FMatrix::tetrahedron()).value;
                let t = 2.0 * 3f64.sqrt();
                (format!("2√3 = {t} ± 1e-9"), v, within(v, t, 1e-9), String::new())
            },
        },
        Check {
            id: "fc-21607",
            description: "classical bound of the near-optimal witness",
            slow: false,
            run: |_| {
                let v = classical_bound(&FMatrix::near_optimal()).value;
                ("21.607 ± 0.005".into(), v, within(v, 21.607, 0.005), String::new())
            },
        },
        Check {
            id: "fq-3sqrt22",
            description: "column-norm complex bound of [[-2,3,3],[3,-2,3],[3,3,-2]]",
            slow: false,
            run: |cfg| {
                let f = FMatrix::example_f1();
                let v = column_norm_sum(&f);
                let t = 3.0 * 22f64.sqrt();
                let (ok, d) = construction_detail(&f, cfg, v);
                (format!("3√22 = {t} ± 1e-9"), v, within(v, t, 1e-9) && ok, d)
            },
        },
        Check {
            id: "fq-4",
            description: "family complex bound at the tetrahedron point",
            slow: false,
            run: |cfg| {
                let v = complex_bound_family(&FamilyParams::tetrahedron()).expect("q ≥ 0");
                let (ok, d) = construction_detail(&FMatrix::tetrahedron(), cfg, v);
                ("4 ± 1e-9".into(), v, within(v, 4.0, 1e-9) && ok, d)
            },
        },
        Check {
            id: "fq-2303",
            description: "column-norm complex bound of the near-optimal witness",
            slow: false,
            run: |cfg| {
                let f = FMatrix::near_optimal();
                let v = column_norm_sum(&f);
                let (ok, d) = construction_detail(&f, cfg, v);
                ("23.03 ± 0.01".into(), v, within(v, 23.03, 0.01) && ok, d)
            },
        },
        Check {
            id: "fr-13677",
            description: "real bound of [[-2,3,3],[3,-2,3],[3,3,-2]] at level 2",
            slow: false,
            run: |cfg| fr(cfg, &FMatrix::example_f1(), 2, 13.677, 0.02),
        },
        Check {
            id: "fr-37367",
            description: "real bound of the tetrahedron witness at level 2",
            slow: false,
            run: |cfg| fr(cfg, &FMatrix::tetrahedron(), 2, 3.7367, 0.02),
        },
        Check {
            id: "fr-21607",
            description: "real bound of the near-optimal witness at level 2",
            slow: false,
            run: |cfg| fr(cfg, &FMatrix::near_optimal(), 2, 21.607, 0.05),
        },
        Check {
            id: "fr-level3",
            description: "level 3 leaves the level-2 real bound of [[-2,3,3],[3,-2,3],[3,3,-2]] unchanged",
            slow: true,
            run: |cfg| {
                let f = FMatrix::example_f1();
                let r2 = real_bound(&f, &SignTable::RESOLVED, &opts(cfg, 2));
                let r3 = real_bound(&f, &SignTable::RESOLVED, &opts(cfg, 3));
                match (r2, r3) {
                    (Ok(a), Ok(b)) => {
                        let d = (b.value - a.value).abs();
                        (
                            "|F_r(3) - F_r(2)| < 1e-6".into(),
                            d,
                            d < 1e-6 && a.status == SolveStatus::Optimal && b.status == SolveStatus::Optimal,
                            format!("level 2 {:.9}, level 3 {:.9} ({:?})", a.value, b.value, b.status),
                        )
                    }
                    (a, b) => ("|F_r(3) - F_r(2)| < 1e-6".into(), f64::NAN, false, format!("{:?} / {:?}", a.err(), b.err())),
                }
            },
        },
        Check {
            id: "ratio-106594",
            description: "ratio F_q/F_r after ascent from the near-optimal witness",
            slow: true,
            run: |cfg| {
                let sc = ScanConfig { level: cfg.level, tolerances: cfg.tolerances, ascent_iters: 3, ..cfg.scan };
                match evaluate(0, &FMatrix::near_optimal(), &sc) {
                    Ok(start) => {
                        let r = refine(&start, &sc);
                        (
                            "≥ 1.060".into(),
                            r.ratio,
                            r.ratio >= 1.060,
                            format!("start {:.6}, {} ascent steps", start.ratio, r.ascent_steps),
                        )
                    }
                    Err(e) => ("≥ 1.060".into(), f64::NAN, false, e),
                }
            },
        },
        Check {
            id: "ratio-tetra",
            description: "ratio F_q/F_r for the tetrahedron witness",
            slow: false,
            run: |cfg| match real_bound(&FMatrix::tetrahedron(), &SignTable::RESOLVED, &opts(cfg, 2)) {
                Ok(r) => {
                    let v = 4.0 / r.value;
                    ("1.0705 ± 0.005".into(), v, within(v, 1.0705, 0.005), format!("F_r {:.9}", r.value))
                }
                Err(e) => ("1.0705 ± 0.005".into(), f64::NAN, false, e.to_string()),
            },
        },
        Check {
            id: "survey-400",
            description: "two-setting survey: no point with both |a_i| and |c_i| above 0.01",
            slow: true,
            run: |cfg| {
                let sc = SurveyConfig { seed: 7, ..cfg.survey };
                let pts = survey(400, &sc);
                let s = SurveySummary::of(&pts);
                (
                    "0 of 400".into(),
                    s.both_large as f64,
                    s.both_large == 0,
                    format!("{} separated, {} not converged", s.separated, s.not_converged),
                )
            },
        },
    ]
}
