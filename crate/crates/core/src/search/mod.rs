//! Searches over witnesses: a ratio scan over 3×3 `f`, and a survey of
//! two-setting functionals.

pub mod scan;
pub mod survey;

pub use scan::{evaluate, ratio_scan, refine, ScanCandidate, ScanConfig, ScanFailure, ScanReport};
pub use survey::{
    eval_survey_f, deterministic_optimum, survey, survey_point, BellFunctional36, GivensParams, SurveyConfig, SurveyModel,
    SurveyPoint, SurveySummary,
};
