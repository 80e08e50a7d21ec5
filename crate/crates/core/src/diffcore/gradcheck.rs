use rand::seq::index;

use super::ParamVector;
use crate::seeding;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub count: usize,
    pub h: f64,
    pub seed: u64,
    /// Restrict probes to these flat indices; `None` probes the whole vector.
    pub pool: Option<Vec<usize>>,
}

impl ProbeSpec {
    pub fn new(count: usize, h: f64, seed: u64) -> Self {
        Self {
            count,
            h,
            seed,
            pool: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Flat index where the maximum was attained.
    pub worst_index: usize,
    pub probed: usize,
}

/// Symmetric relative error with a 1e-8 floor on the denominator.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8)
}

/// Compare `analytic` against central differences of `objective` on a seeded
/// subset of coordinates.
pub fn finite_diff_check<F>(
    objective: F,
    params: &ParamVector,
    analytic: &[f64],
    spec: &ProbeSpec,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    if spec.count == 0 {
        return Err(Error::Contract("finite_diff_check needs at least one probe".into()));
    }
    if !(spec.h > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {}", spec.h)));
    }
    if analytic.len() != params.len() {
        return Err(Error::Contract(format!(
            "analytic gradient has {} entries, params have {}",
            analytic.len(),
            params.len()
        )));
    }

    let pool: Vec<usize> = match &spec.pool {
        Some(p) => p.clone(),
        None => (0..params.len()).collect(),
    };
    if pool.is_empty() {
        return Err(Error::Contract("probe pool is empty".into()));
    }
    let mut rng = seeding::rng(spec.seed, &[seeding::STREAM_PROBE]);
    let mut probes: Vec<usize> = if spec.count >= pool.len() {
        pool.clone()
    } else {
        index::sample(&mut rng, pool.len(), spec.count)
            .into_iter()
            .map(|k| pool[k])
            .collect()
    };
    probes.sort_unstable();

    let mut work = params.clone();
    let eval = |p: &ParamVector| -> Result<f64> {
        let v = objective(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numeric("finite_diff_check objective", format!("returned {v}")))
        }
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: probes[0],
        probed: probes.len(),
    };
    for &i in &probes {
        let original = work.values()[i];
        work.values_mut()[i] = original + spec.h;
        let plus = eval(&work)?;
        work.values_mut()[i] = original - spec.h;
        let minus = eval(&work)?;
        work.values_mut()[i] = original;

        let numeric = (plus - minus) / (2.0 * spec.h);
        let err = relative_error(numeric, analytic[i]);
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_index = i;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Layout;

    fn scalar(v: f64) -> ParamVector {
        ParamVector::from_values(Layout::new().push("theta", &[1]), vec![v]).unwrap()
    }

    #[test]
    fn quadratic_is_exact() {
        let p = scalar(3.0);
        let r = finite_diff_check(
            |p| Ok(p.values()[0] * p.values()[0]),
            &p,
            &[6.0],
            &ProbeSpec::new(1, 1e-5, 0),
        )
        .unwrap();
        assert!(r.max_relative_error < 1e-6, "{r:?}");
    }

    #[test]
    fn constant_objective_has_zero_error() {
        let p = scalar(-2.0);
        let r = finite_diff_check(|_| Ok(4.2), &p, &[0.0], &ProbeSpec::new(1, 1e-5, 0)).unwrap();
        assert!(r.max_relative_error < 1e-12);
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let p = ParamVector::from_values(Layout::new().push("w", &[1, 3]), vec![1.0, 2.0, 3.0]).unwrap();
        let f = |p: &ParamVector| Ok(p.values().iter().map(|v| v.powi(3)).sum());
        let good: Vec<f64> = p.values().iter().map(|v| 3.0 * v * v).collect();
        let mut bad = good.clone();
        bad[2] *= 1.01;
        let spec = ProbeSpec::new(10, 1e-5, 1);
        assert!(finite_diff_check(f, &p, &good, &spec).unwrap().max_relative_error < 1e-8);
        let r = finite_diff_check(f, &p, &bad, &spec).unwrap();
        assert!(r.max_relative_error > 1e-3);
        assert_eq!(r.worst_index, 2);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let p = scalar(0.0);
        let r = finite_diff_check(|_| Ok(f64::NAN), &p, &[0.0], &ProbeSpec::new(1, 1e-5, 0));
        assert!(matches!(r, Err(Error::Numeric { .. })));
    }

    #[test]
    fn bad_spec_is_rejected() {
        let p = scalar(0.0);
        assert!(finite_diff_check(|_| Ok(0.0), &p, &[0.0], &ProbeSpec::new(0, 1e-5, 0)).is_err());
        assert!(finite_diff_check(|_| Ok(0.0), &p, &[0.0], &ProbeSpec::new(1, 0.0, 0)).is_err());
    }
}
