use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::sim::{EpochRecord, RunError, RunSummary};

/// Column order of `epochs.csv`.
pub const EPOCH_COLUMNS: [&str; 13] = [
    "t",
    "true_e",
    "true_n",
    "true_u",
    "est_e",
    "est_n",
    "est_u",
    "fused_e",
    "fused_n",
    "fused_u",
    "raw_err",
    "fused_err",
    "n_detections",
];

fn epochs_csv(records: &[EpochRecord]) -> String {
    let mut out = EPOCH_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let (est, raw) = match &r.estimate {
            Some(e) => (
                format!("{},{},{}", e.position.east, e.position.north, e.position.up),
                r.raw_error.map(|x| x.to_string()).unwrap_or_default(),
            ),
            None => (",,".to_owned(), String::new()),
        };
        let f = r.fused.position();
        // f64 Display is the shortest round-tripping representation
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.timestamp,
            r.truth.east,
            r.truth.north,
            r.truth.up,
            est,
            f.east,
            f.north,
            f.up,
            raw,
            r.fused_error,
            r.detections
        )
        .unwrap();
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

/// Writes `epochs.csv`, `summary.json` and `scenario.toml` (the input echoed
/// for provenance) into `out_dir`, creating it if needed.
pub fn write_outputs(
    records: &[EpochRecord],
    summary: &RunSummary,
    scenario_source: &str,
    out_dir: impl AsRef<Path>,
) -> Result<(), RunError> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    write(&dir.join("epochs.csv"), &epochs_csv(records))?;
    let mut json = serde_json::to_string_pretty(summary).expect("summary serializes");
    json.push('\n');
    write(&dir.join("summary.json"), &json)?;
    write(&dir.join("scenario.toml"), scenario_source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::EkfState;
    use crate::geodesy::EnuCoord;
    use crate::harness::sim::OriginSummary;
    use crate::multilateration::PositionEstimate;

    fn record(t: f64, fix: bool) -> EpochRecord {
        let truth = EnuCoord::new(1.0, 2.0, -3.0);
        EpochRecord {
            epoch: 0,
            timestamp: t,
            truth,
            detections: if fix { 4 } else { 1 },
            estimate: fix.then(|| PositionEstimate {
                position: EnuCoord::new(1.5, 2.0, -3.0),
                best_fitness: 0.0,
                population_dispersion: 0.1,
                generations_run: 3,
                geometry_warning: false,
            }),
            fused: EkfState::new(truth, 1.0, 1.0, t),
            raw_error: fix.then_some(0.5),
            fused_error: 0.0,
        }
    }

    fn empty_summary() -> RunSummary {
        RunSummary {
            epochs: 0,
            fixes: 0,
            fix_gaps: 0,
            pings: 0,
            detections: 0,
            detection_rate: 0.0,
            raw_rmse: None,
            fused_rmse: None,
            fused_rmse_all: None,
            raw_max_error: None,
            fused_max_error: None,
            origin: OriginSummary { latitude_deg: 0.0, longitude_deg: 0.0, height: 0.0 },
            master_seed: 1,
            ga_seed: 2,
            path_model: "refracted".into(),
        }
    }

    #[test]
    fn empty_run_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&[], &empty_summary(), "seed = 1\n", dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("epochs.csv")).unwrap();
        assert_eq!(csv, format!("{}\n", EPOCH_COLUMNS.join(",")));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert!(summary["raw_rmse"].is_null());
        assert!(summary["fused_rmse"].is_null());
        assert_eq!(fs::read_to_string(dir.path().join("scenario.toml")).unwrap(), "seed = 1\n");
    }

    #[test]
    fn one_line_per_epoch() {
        let csv = epochs_csv(&[record(0.0, true), record(1.0, false), record(2.0, true)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            "t,true_e,true_n,true_u,est_e,est_n,est_u,fused_e,fused_n,fused_u,raw_err,fused_err,n_detections"
        );
        assert_eq!(lines[1], "0,1,2,-3,1.5,2,-3,1,2,-3,0.5,0,4");
        assert_eq!(lines[2], "1,1,2,-3,,,,1,2,-3,,0,1");
        for l in &lines {
            assert_eq!(l.split(',').count(), EPOCH_COLUMNS.len());
        }
    }

    #[test]
    fn unwritable_directory_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_outputs(&[], &empty_summary(), "", blocker.join("out")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
