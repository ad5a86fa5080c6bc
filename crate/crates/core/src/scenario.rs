//! Forecast ingestion and the weighted scenario set.
//!
//! Forecast errors are drawn as i.i.d. normals with standard deviation equal
//! to 10% of each series' maximum. Each sample `k` uses its own ChaCha8
//! stream (`seed`, stream `k`), and normal deviates come from the Box–Muller
//! transform over the stream's uniform `f64`s, so a given `(seed, n)` yields
//! the same realizations on every platform and thread count.

use std::f64::consts::PI;
use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::case::MicrogridCase;
use crate::error::{Error, Result};

/// Relative standard deviation of the forecast error.
pub const ERROR_STD_FRACTION: f64 = 0.10;

/// Weights of the (max-average, min-average, forecast) scenarios.
pub const SCENARIO_WEIGHTS: [f64; 3] = [0.001, 0.001, 0.998];

/// Renewable MPP and load power series, p.u., indexed `[device][t]` in case order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub renewable_mpp: Vec<Vec<f64>>,
    pub load_p: Vec<Vec<f64>>,
}

impl Profile {
    pub fn periods(&self) -> usize {
        self.renewable_mpp
            .iter()
            .chain(&self.load_p)
            .map(Vec::len)
            .next()
            .unwrap_or(0)
    }

    /// Mean over time of total renewable MPP plus total load.
    pub fn average_power(&self) -> f64 {
        let t = self.periods();
        if t == 0 {
            return 0.0;
        }
        let total: f64 = self
            .renewable_mpp
            .iter()
            .chain(&self.load_p)
            .map(|s| s.iter().sum::<f64>())
            .sum();
        total / t as f64
    }

    fn series(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.renewable_mpp.iter().chain(&self.load_p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub step_hours: f64,
    pub timestamps: Vec<String>,
    pub profile: Profile,
}

/// Read a forecast CSV (`timestamp,<series-id>,...`, kW) for `case`.
///
/// Every renewable and load id of the case must appear as a column, and the
/// number of rows must match the case horizon.
pub fn load_forecast_csv(path: impl AsRef<Path>, case: &MicrogridCase) -> Result<Forecast> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Forecast(format!("{}: empty file", path.display())));
    }
    if header[0] != "timestamp" {
        return Err(Error::Forecast(format!(
            "{}: first column must be `timestamp`, found {:?}",
            path.display(),
            header[0]
        )));
    }
    let ids = &header[1..];

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    let mut ended: Vec<Option<usize>> = vec![None; ids.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(row + 2, |p| p.line() as usize);
        timestamps.push(rec.get(0).unwrap_or("").to_string());
        for (c, id) in ids.iter().enumerate() {
            let cell = rec.get(c + 1).unwrap_or("");
            if cell.is_empty() {
                ended[c].get_or_insert(line);
                continue;
            }
            if let Some(gap) = ended[c] {
                return Err(Error::Forecast(format!(
                    "{}: series {id:?} has a gap at line {gap}",
                    path.display()
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Forecast(format!("{}: line {line}: malformed value {cell:?} for {id:?}", path.display()))
            })?;
            if !v.is_finite() {
                return Err(Error::Forecast(format!(
                    "{}: line {line}: non-finite value for {id:?}",
                    path.display()
                )));
            }
            if v < 0.0 {
                return Err(Error::Forecast(format!(
                    "{}: line {line}: negative power {v} for {id:?}",
                    path.display()
                )));
            }
            columns[c].push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(Error::Forecast(format!("{}: no data rows", path.display())));
    }
    let t = timestamps.len();
    for (id, col) in ids.iter().zip(&columns) {
        if col.len() != t {
            return Err(Error::Forecast(format!(
                "{}: length mismatch: series {id:?} has {} values, expected {t}",
                path.display(),
                col.len()
            )));
        }
    }
    if t != case.horizon.periods {
        return Err(Error::Forecast(format!(
            "{}: length mismatch: {t} rows but the case horizon has {} periods",
            path.display(),
            case.horizon.periods
        )));
    }

    // kW to p.u.
    let scale = 1e3 / case.system.s_base_va;
    let mut take = |id: &str| -> Result<Vec<f64>> {
        let c = ids
            .iter()
            .position(|h| h == id)
            .ok_or_else(|| Error::Forecast(format!("{}: missing series {id:?}", path.display())))?;
        Ok(std::mem::take(&mut columns[c]).into_iter().map(|v| v * scale).collect())
    };
    let renewable_mpp = case
        .renewables
        .iter()
        .map(|r| take(&r.id))
        .collect::<Result<Vec<_>>>()?;
    let load_p = case.loads.iter().map(|l| take(&l.id)).collect::<Result<Vec<_>>>()?;
    let known: Vec<&str> = case
        .renewables
        .iter()
        .map(|r| r.id.as_str())
        .chain(case.loads.iter().map(|l| l.id.as_str()))
        .collect();
    if let Some(extra) = ids.iter().find(|id| !known.contains(&id.as_str())) {
        return Err(Error::Forecast(format!(
            "{}: series {extra:?} matches no renewable or load",
            path.display()
        )));
    }

    Ok(Forecast {
        step_hours: case.horizon.step_hours,
        timestamps,
        profile: Profile {
            renewable_mpp,
            load_p,
        },
    })
}

/// Standard normal deviates by Box–Muller, consuming uniforms in pairs.
struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        BoxMuller { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // gen::<f64>() is in [0, 1); shift to (0, 1] so ln stays finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Draw `n` forecast realizations with normal errors, clamped at zero.
pub fn sample_error_scenarios(fc: &Forecast, n: usize, seed: u64) -> Vec<Profile> {
    let p = &fc.profile;
    let sigmas: Vec<f64> = p
        .series()
        .map(|s| ERROR_STD_FRACTION * s.iter().cloned().fold(0.0, f64::max))
        .collect();
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut normal = BoxMuller::new(seed, k as u64);
            let mut sig = sigmas.iter();
            let mut perturb = |series: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                series
                    .iter()
                    .map(|s| {
                        let sigma = *sig.next().unwrap();
                        s.iter().map(|&v| (v + sigma * normal.next()).max(0.0)).collect()
                    })
                    .collect()
            };
            let renewable_mpp = perturb(&p.renewable_mpp);
            let load_p = perturb(&p.load_p);
            Profile {
                renewable_mpp,
                load_p,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
    pub scenarios: Vec<Profile>,
}

impl ScenarioSet {
    pub fn new(labels: Vec<String>, weights: Vec<f64>, scenarios: Vec<Profile>) -> Result<Self> {
        let set = ScenarioSet {
            labels,
            weights,
            scenarios,
        };
        set.check()?;
        Ok(set)
    }

    /// One scenario with weight 1.
    pub fn single(profile: Profile) -> Self {
        ScenarioSet {
            labels: vec!["forecast".into()],
            weights: vec![1.0],
            scenarios: vec![profile],
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn periods(&self) -> usize {
        self.scenarios.first().map_or(0, Profile::periods)
    }

    fn check(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Forecast("scenario set is empty".into()));
        }
        if self.weights.len() != self.scenarios.len() || self.labels.len() != self.scenarios.len() {
            return Err(Error::Forecast("one weight and label per scenario required".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Forecast("scenario weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Forecast(format!("scenario weights sum to {total}, not 1")));
        }
        let t = self.periods();
        let first = &self.scenarios[0];
        for s in &self.scenarios {
            if s.renewable_mpp.len() != first.renewable_mpp.len()
                || s.load_p.len() != first.load_p.len()
                || s.series().any(|x| x.len() != t)
            {
                return Err(Error::Forecast("scenario series lengths are not uniform".into()));
            }
        }
        Ok(())
    }

    /// Check the set against a case: one series per renewable and load, `T` values each.
    pub fn check_against(&self, case: &MicrogridCase) -> Result<()> {
        self.check()?;
        let s = &self.scenarios[0];
        if s.renewable_mpp.len() != case.renewables.len() || s.load_p.len() != case.loads.len() {
            return Err(Error::Model(
                "scenario set does not match the case's renewables and loads".into(),
            ));
        }
        if self.periods() != case.horizon.periods && s.series().next().is_some() {
            return Err(Error::Model(format!(
                "scenario length {} differs from horizon {}",
                self.periods(),
                case.horizon.periods
            )));
        }
        Ok(())
    }
}

/// Index of the first maximum and first minimum of `values`.
fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let (mut hi, mut lo) = (0, 0);
    for (k, &v) in values.iter().enumerate() {
        if v > values[hi] {
            hi = k;
        }
        if v < values[lo] {
            lo = k;
        }
    }
    (hi, lo)
}

/// Keep the samples with maximum and minimum average power next to the raw
/// forecast, weighted 0.001, 0.001 and 0.998.
pub fn build_scenario_set(fc: &Forecast, samples: &[Profile]) -> Result<ScenarioSet> {
    if samples.is_empty() {
        return Err(Error::Forecast("no samples to select extreme scenarios from".into()));
    }
    let averages: Vec<f64> = samples.iter().map(Profile::average_power).collect();
    let (hi, lo) = extreme_indices(&averages);
    ScenarioSet::new(
        vec!["max_average".into(), "min_average".into(), "forecast".into()],
        SCENARIO_WEIGHTS.to_vec(),
        vec![samples[hi].clone(), samples[lo].clone(), fc.profile.clone()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;
    use std::io::Write;

    fn forecast(values: Vec<f64>) -> Forecast {
        Forecast {
            step_hours: 0.25,
            timestamps: (0..values.len()).map(|t| t.to_string()).collect(),
            profile: Profile {
                renewable_mpp: vec![values.clone()],
                load_p: vec![values],
            },
        }
    }

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn csv_rows(t: usize) -> String {
        let mut s = String::from("timestamp,wind_2,load_2\n");
        for k in 0..t {
            s += &format!("2024-01-01T{:02}:{:02},{},{}\n", k / 4, (k % 4) * 15, 100 + k, 50);
        }
        s
    }

    fn case_with_periods(t: usize) -> MicrogridCase {
        let mut c = toy::two_bus_case();
        c.horizon.periods = t;
        c
    }

    #[test]
    fn reads_24_rows() {
        let f = write_csv(&csv_rows(24));
        let fc = load_forecast_csv(f.path(), &case_with_periods(24)).unwrap();
        assert_eq!(fc.profile.periods(), 24);
        // 100 kW on a 1 MVA base
        assert!((fc.profile.renewable_mpp[0][0] - 0.1).abs() < 1e-15);
        assert!((fc.profile.load_p[0][3] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_csv("");
        assert!(load_forecast_csv(f.path(), &case_with_periods(24)).is_err());
        let f = write_csv("timestamp,wind_2,load_2\n");
        assert!(load_forecast_csv(f.path(), &case_with_periods(24)).is_err());
    }

    #[test]
    fn short_column_is_a_length_mismatch() {
        let mut text = csv_rows(24);
        // drop the last load value
        text = text.trim_end().trim_end_matches("50").to_string() + "\n";
        let f = write_csv(&text);
        let err = load_forecast_csv(f.path(), &case_with_periods(24)).unwrap_err();
        assert!(err.to_string().contains("length mismatch"), "{err}");
    }

    #[test]
    fn negative_and_malformed_values() {
        let f = write_csv("timestamp,wind_2,load_2\na,-1,2\nb,1,2\n");
        let err = load_forecast_csv(f.path(), &case_with_periods(2)).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
        let f = write_csv("timestamp,wind_2,load_2\na,x,2\nb,1,2\n");
        assert!(load_forecast_csv(f.path(), &case_with_periods(2)).is_err());
        let f = write_csv("timestamp,wind_2,load_2\na,NaN,2\nb,1,2\n");
        assert!(load_forecast_csv(f.path(), &case_with_periods(2)).is_err());
    }

    #[test]
    fn unknown_or_missing_series() {
        let f = write_csv("timestamp,wind_2,load_9\na,1,2\nb,1,2\n");
        assert!(load_forecast_csv(f.path(), &case_with_periods(2)).is_err());
    }

    #[test]
    fn horizon_mismatch() {
        let f = write_csv(&csv_rows(23));
        let err = load_forecast_csv(f.path(), &case_with_periods(24)).unwrap_err();
        assert!(err.to_string().contains("length mismatch"));
    }

    #[test]
    fn sampling_is_deterministic() {
        let fc = forecast(vec![1.0, 0.5, 0.0, 2.0]);
        assert_eq!(sample_error_scenarios(&fc, 20, 7), sample_error_scenarios(&fc, 20, 7));
        assert_ne!(sample_error_scenarios(&fc, 20, 7), sample_error_scenarios(&fc, 20, 8));
    }

    #[test]
    fn sample_prefix_is_stable_in_n() {
        let fc = forecast(vec![1.0, 0.5]);
        let a = sample_error_scenarios(&fc, 5, 3);
        let b = sample_error_scenarios(&fc, 50, 3);
        assert_eq!(a[..], b[..5]);
    }

    #[test]
    fn error_std_matches_ten_percent() {
        let fc = Forecast {
            step_hours: 0.25,
            timestamps: vec!["0".into()],
            profile: Profile {
                renewable_mpp: vec![vec![1.0]],
                load_p: vec![],
            },
        };
        // value 1.0 with sigma 0.1: clamping at zero happens with negligible probability
        let s = sample_error_scenarios(&fc, 10_000, 11);
        let errs: Vec<f64> = s.iter().map(|p| p.renewable_mpp[0][0] - 1.0).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
    }

    #[test]
    fn zero_forecast_stays_non_negative() {
        let fc = forecast(vec![0.0, 0.0, 3.0]);
        for p in sample_error_scenarios(&fc, 500, 1) {
            assert!(p.renewable_mpp[0].iter().chain(&p.load_p[0]).all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn weights_sum_to_one_exactly() {
        let fc = forecast(vec![1.0, 2.0]);
        let set = build_scenario_set(&fc, &sample_error_scenarios(&fc, 10, 0)).unwrap();
        assert_eq!(set.weights.iter().sum::<f64>(), 1.0);
        assert_eq!(set.weights, vec![0.001, 0.001, 0.998]);
    }

    #[test]
    fn forecast_only_sample_gives_identical_scenarios() {
        let fc = forecast(vec![1.0, 2.0]);
        let set = build_scenario_set(&fc, &[fc.profile.clone()]).unwrap();
        assert!(set.scenarios.iter().all(|s| *s == fc.profile));
    }

    #[test]
    fn last_scenario_is_the_forecast() {
        let fc = forecast(vec![0.3, 0.7, 1.1]);
        let set = build_scenario_set(&fc, &sample_error_scenarios(&fc, 30, 5)).unwrap();
        assert_eq!(set.scenarios[2], fc.profile);
    }

    #[test]
    fn extremes_match_independent_scan() {
        let fc = forecast(vec![0.3, 0.7, 1.1, 0.2]);
        let samples = sample_error_scenarios(&fc, 100, 42);
        let set = build_scenario_set(&fc, &samples).unwrap();
        // brute force: every sample's average recomputed element by element
        let mut best_hi = (f64::NEG_INFINITY, 0);
        let mut best_lo = (f64::INFINITY, 0);
        for (k, s) in samples.iter().enumerate() {
            let mut total = 0.0;
            for t in 0..4 {
                total += s.renewable_mpp[0][t] + s.load_p[0][t];
            }
            let avg = total / 4.0;
            if avg > best_hi.0 {
                best_hi = (avg, k);
            }
            if avg < best_lo.0 {
                best_lo = (avg, k);
            }
        }
        assert_eq!(set.scenarios[0], samples[best_hi.1]);
        assert_eq!(set.scenarios[1], samples[best_lo.1]);
    }

    #[test]
    fn ties_take_the_lowest_index() {
        let p = |v: f64| Profile {
            renewable_mpp: vec![vec![v]],
            load_p: vec![vec![0.0]],
        };
        assert_eq!(extreme_indices(&[1.0, 3.0, 3.0, 0.0, 0.0]), (1, 3));
        let fc = forecast(vec![1.0]);
        let set = build_scenario_set(&fc, &[p(2.0), p(2.0)]).unwrap();
        assert_eq!(set.scenarios[0], p(2.0));
    }

    #[test]
    fn permutation_keeps_extremes() {
        let fc = forecast(vec![0.3, 0.7]);
        let mut samples = sample_error_scenarios(&fc, 40, 9);
        let a = build_scenario_set(&fc, &samples).unwrap();
        samples.reverse();
        samples.rotate_left(13);
        let b = build_scenario_set(&fc, &samples).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let fc = forecast(vec![1.0]);
        let r = ScenarioSet::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.4],
            vec![fc.profile.clone(), fc.profile.clone()],
        );
        assert!(r.is_err());
    }
}
