//! Method registry: a parseable description of every integrator in the crate
//! and a prepared, backend-specific stepper built from it.

use std::fmt;
use std::str::FromStr;

use crate::coeffs::Sequence;
use crate::error::{Error, Result};
use crate::mpe::{mpe_step, nested_t6_step, MpeMethod};
use crate::rkn::{albrecht6_step, m4_step, mpe6vv_step, nystrom4_step, raw_variant, RawVariant};
use crate::scalar::Real;
use crate::state::{AccelField, PhaseState};
use crate::steppers::{forest_ruth_step, pv_step, vv_step, Base};

/// Integrator description.
///
/// Text form: `vv`, `pv`, `fr`, `nested-t6`, `nystrom4`, `m4`, `mpe6vv`,
/// `albrecht6`, `raw:<vv12|vv123|vv124>` or `mpe:<vv|pv>:<k1,k2,...>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodSpec {
    Vv,
    Pv,
    ForestRuth,
    /// Nested `{1,2}` extrapolation on the PV base.
    NestedT6,
    Nystrom4,
    M4,
    Mpe6Vv,
    Albrecht6,
    Raw(RawVariant),
    Mpe {
        base: Base,
        seq: Sequence,
    },
}

impl MethodSpec {
    pub fn mpe(base: Base, ks: &[u32]) -> Result<Self> {
        Ok(MethodSpec::Mpe {
            base,
            seq: Sequence::new(ks.to_vec())?,
        })
    }

    /// Minimal PV-based method of order `2n`.
    pub fn minimal(n: usize) -> Result<Self> {
        Ok(MethodSpec::Mpe {
            base: Base::Pv,
            seq: crate::coeffs::natural_sequence(n)?,
        })
    }

    pub fn order(&self) -> u32 {
        match self {
            MethodSpec::Vv | MethodSpec::Pv => 2,
            MethodSpec::ForestRuth | MethodSpec::Nystrom4 | MethodSpec::M4 => 4,
            MethodSpec::NestedT6 | MethodSpec::Mpe6Vv | MethodSpec::Albrecht6 => 6,
            MethodSpec::Raw(r) => r.order(),
            MethodSpec::Mpe { seq, .. } => seq.order(),
        }
    }

    /// Force evaluations per step, by the analytic count.
    pub fn forces_per_step(&self) -> u64 {
        match self {
            MethodSpec::Vv => 2,
            MethodSpec::Pv => 1,
            MethodSpec::ForestRuth | MethodSpec::Nystrom4 | MethodSpec::M4 => 3,
            MethodSpec::NestedT6 => 9,
            MethodSpec::Mpe6Vv | MethodSpec::Albrecht6 => 5,
            MethodSpec::Raw(r) => r.forces_per_step(),
            MethodSpec::Mpe { base, seq } => match base {
                Base::Pv => seq.total_steps(),
                Base::Vv => seq.total_steps() + 1,
            },
        }
    }

    pub fn is_symplectic(&self) -> bool {
        matches!(
            self,
            MethodSpec::Vv | MethodSpec::Pv | MethodSpec::ForestRuth
        ) || matches!(self, MethodSpec::Mpe { seq, .. } if seq.len() == 1)
    }

    pub fn prepare<T: Real>(&self) -> Method<T> {
        let mpe = match self {
            MethodSpec::Mpe { base, seq } => Some(MpeMethod::new(*base, seq.clone())),
            _ => None,
        };
        Method {
            spec: self.clone(),
            mpe,
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Vv => f.write_str("vv"),
            MethodSpec::Pv => f.write_str("pv"),
            MethodSpec::ForestRuth => f.write_str("fr"),
            MethodSpec::NestedT6 => f.write_str("nested-t6"),
            MethodSpec::Nystrom4 => f.write_str("nystrom4"),
            MethodSpec::M4 => f.write_str("m4"),
            MethodSpec::Mpe6Vv => f.write_str("mpe6vv"),
            MethodSpec::Albrecht6 => f.write_str("albrecht6"),
            MethodSpec::Raw(r) => write!(f, "raw:{r}"),
            MethodSpec::Mpe { base, seq } => write!(f, "mpe:{base}:{seq}"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "vv" => return Ok(MethodSpec::Vv),
            "pv" => return Ok(MethodSpec::Pv),
            "fr" | "forest-ruth" => return Ok(MethodSpec::ForestRuth),
            "nested-t6" => return Ok(MethodSpec::NestedT6),
            "nystrom4" | "n" => return Ok(MethodSpec::Nystrom4),
            "m4" => return Ok(MethodSpec::M4),
            "mpe6vv" => return Ok(MethodSpec::Mpe6Vv),
            "albrecht6" | "a6" => return Ok(MethodSpec::Albrecht6),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("raw:") {
            return Ok(MethodSpec::Raw(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("mpe:") {
            let (base, ks) = rest.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("expected mpe:<base>:<k1,k2,...>, got {s:?}"))
            })?;
            return Ok(MethodSpec::Mpe {
                base: base.parse()?,
                seq: ks.parse()?,
            });
        }
        Err(Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// A [`MethodSpec`] prepared for scalar backend `T`.
#[derive(Clone, Debug)]
pub struct Method<T> {
    spec: MethodSpec,
    mpe: Option<MpeMethod<T>>,
}

impl<T: Real> Method<T> {
    pub fn spec(&self) -> &MethodSpec {
        &self.spec
    }

    pub fn order(&self) -> u32 {
        self.spec.order()
    }

    pub fn step(&self, s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<PhaseState<T>> {
        match &self.spec {
            MethodSpec::Vv => vv_step(s, h, a),
            MethodSpec::Pv => pv_step(s, h, a),
            MethodSpec::ForestRuth => forest_ruth_step(s, h, a),
            MethodSpec::NestedT6 => nested_t6_step(Base::Pv, s, h, a),
            MethodSpec::Nystrom4 => nystrom4_step(s, h, a),
            MethodSpec::M4 => m4_step(s, h, a),
            MethodSpec::Mpe6Vv => mpe6vv_step(s, h, a),
            MethodSpec::Albrecht6 => albrecht6_step(s, h, a),
            MethodSpec::Raw(r) => raw_variant(*r, s, h, a),
            MethodSpec::Mpe { .. } => {
                mpe_step(self.mpe.as_ref().expect("prepared weights"), s, h, a)
            }
        }
    }
}

/// Outcome of [`integrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport<T> {
    pub final_state: PhaseState<T>,
    pub steps: u64,
    pub force_evals: u64,
    pub notes: String,
}

/// `n_steps` fixed steps of size `h`, each output feeding the next step.
pub fn integrate<T: Real>(
    method: &Method<T>,
    s0: &PhaseState<T>,
    h: T,
    n_steps: u64,
    a: &AccelField<'_, T>,
) -> Result<RunReport<T>> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
    }
    let start = a.count();
    let mut s = s0.clone();
    for i in 0..n_steps {
        s = method.step(&s, h, a).map_err(|e| Error::StepFailure {
            step: i,
            source: Box::new(e),
        })?;
    }
    Ok(RunReport {
        final_state: s,
        steps: n_steps,
        force_evals: a.count() - start,
        notes: format!(
            "method={} order={} backend={}",
            method.spec,
            method.order(),
            T::NAME
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::harmonic_field;

    #[test]
    fn spec_text_round_trips() {
        for text in [
            "vv",
            "pv",
            "fr",
            "nested-t6",
            "nystrom4",
            "m4",
            "mpe6vv",
            "albrecht6",
            "raw:vv123",
            "mpe:pv:1,2,3",
            "mpe:vv:2,4",
        ] {
            let spec: MethodSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("mpe:pv".parse::<MethodSpec>().is_err());
        assert!("mpe:xv:1,2".parse::<MethodSpec>().is_err());
        assert!("mpe:pv:1,1".parse::<MethodSpec>().is_err());
        assert!("rk4".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn integrate_counts_forces() {
        let a = harmonic_field::<f64>();
        let s = PhaseState::from_f64(&[1.0], &[0.0]).unwrap();
        for (text, per_step) in [("mpe:pv:1,2,3", 6), ("mpe:vv:1,2", 4), ("albrecht6", 5)] {
            let spec: MethodSpec = text.parse().unwrap();
            assert_eq!(spec.forces_per_step(), per_step);
            let m = spec.prepare::<f64>();
            let report = integrate(&m, &s, 0.01, 100, &a).unwrap();
            assert_eq!(report.force_evals, 100 * per_step, "{text}");
            assert_eq!(report.steps, 100);
        }
    }

    #[test]
    fn single_step_run_matches_step() {
        let a = harmonic_field::<f64>();
        let s = PhaseState::from_f64(&[1.0], &[0.5]).unwrap();
        let m = MethodSpec::mpe(Base::Pv, &[1, 2]).unwrap().prepare::<f64>();
        let run = integrate(&m, &s, 0.1, 1, &a).unwrap();
        assert_eq!(run.final_state, m.step(&s, 0.1, &a).unwrap());
        assert!(integrate(&m, &s, 0.1, 0, &a).is_err());
    }

    #[test]
    fn failure_carries_step_index() {
        let a = AccelField::<f64>::new(|q: &[f64]| {
            if q[0] > 1.06 {
                Err(Error::NonFinite("wall".into()))
            } else {
                Ok(vec![0.0])
            }
        });
        let s = PhaseState::from_f64(&[1.0], &[1.0]).unwrap();
        let m = MethodSpec::Pv.prepare::<f64>();
        let err = integrate(&m, &s, 0.02, 10, &a).unwrap_err();
        // Midpoints 1.01, 1.03, 1.05, 1.07 -> step index 3.
        assert!(matches!(err, Error::StepFailure { step: 3, .. }), "{err}");
    }
}
