use std::collections::BTreeMap;

use mpsplit::coeffs::{format_rational, weights};
use mpsplit::orbit::{
    energy, first_stable, kepler_field, kepler_init, lrl_vector, measured_order, period_step,
    precession_per_period, signed_angle, PrecessionRecord, System,
};
use mpsplit::state::harmonic_field;
use mpsplit::{integrate, DoubleDouble, MethodSpec, PhaseState, Real};
use rayon::prelude::*;

use crate::config::{Backend, BenchConfig, Format, SystemKind};
use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

/// What a subcommand produced.
pub enum Output {
    Text(String),
    Table(Table),
}

fn pool(cfg: &BenchConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))
}

fn require_eccentric(cfg: &BenchConfig) -> Result<()> {
    if cfg.e.contains(&0.0) {
        return Err(CliError::Config(
            "precession needs e > 0; the circular orbit has no LRL direction".into(),
        ));
    }
    Ok(())
}

pub fn coeffs(cfg: &BenchConfig) -> Result<Output> {
    let seq = cfg.sequence()?;
    let w = weights(&seq);
    let cs: Vec<String> = w.cs.iter().map(format_rational).collect();
    let err = format_rational(&w.err);
    let total = seq.total_steps();
    if cfg.format == Format::Text {
        return Ok(Output::Text(format!(
            "{} | err={err} | order={}\nforces per step: pv={total} vv={}\n",
            cs.join(", "),
            w.order,
            total + 1
        )));
    }
    let mut table = Table::new("coeffs/1", &["k", "weight"]);
    for (&k, c) in seq.ks().iter().zip(cs) {
        table.push(vec![k.into(), c.into()]);
    }
    table.notes = vec![
        format!("err={err}"),
        format!("order={}", w.order),
        format!("forces-pv={total}"),
        format!("forces-vv={}", total + 1),
    ];
    Ok(Output::Table(table))
}

fn precession_cell(
    backend: Backend,
    spec: &MethodSpec,
    e: f64,
    steps: u64,
) -> std::result::Result<PrecessionRecord, String> {
    let run = match backend {
        Backend::Double => precession_per_period(&spec.prepare::<f64>(), e, steps),
        Backend::Extended => precession_per_period(&spec.prepare::<DoubleDouble>(), e, steps),
    };
    run.map_err(|err| err.to_string())
}

type Cells = Vec<(
    (usize, usize, usize),
    std::result::Result<PrecessionRecord, String>,
)>;

/// Every `(spec, e, steps)` cell, computed concurrently and returned sorted
/// by index.
fn sweep(cfg: &BenchConfig, specs: &[MethodSpec]) -> Result<Cells> {
    let keys: Vec<(usize, usize, usize)> = (0..specs.len())
        .flat_map(|m| {
            (0..cfg.e.len()).flat_map(move |e| (0..cfg.h_schedule.len()).map(move |s| (m, e, s)))
        })
        .collect();
    let mut cells: Cells = pool(cfg)?.install(|| {
        keys.par_iter()
            .map(|&(m, e, s)| {
                let rec = precession_cell(cfg.backend, &specs[m], cfg.e[e], cfg.h_schedule[s]);
                ((m, e, s), rec)
            })
            .collect()
    });
    cells.sort_by_key(|(k, _)| *k);
    Ok(cells)
}

pub const PRECESSION_COLUMNS: &[&str] = &[
    "method",
    "e",
    "steps_per_period",
    "h",
    "dtheta",
    "ratio",
    "kind",
    "note",
];

pub fn precession(cfg: &BenchConfig) -> Result<Output> {
    require_eccentric(cfg)?;
    let specs = cfg.methods()?;
    let cells = sweep(cfg, &specs)?;
    let mut table = Table::new("precession/1", PRECESSION_COLUMNS);
    let mut groups: BTreeMap<(usize, usize), Vec<&PrecessionRecord>> = BTreeMap::new();
    for ((m, e, s), rec) in &cells {
        let name = specs[*m].to_string();
        let group = groups.entry((*m, *e)).or_default();
        match rec {
            Ok(r) => {
                table.push(vec![
                    name.clone().into(),
                    r.e.into(),
                    r.steps_per_period.into(),
                    r.h.into(),
                    r.dtheta.into(),
                    r.ratio.into(),
                    "sample".into(),
                    Cell::Empty,
                ]);
                group.push(r);
            }
            Err(msg) => table.push(vec![
                name.clone().into(),
                cfg.e[*e].into(),
                cfg.h_schedule[*s].into(),
                period_step::<f64>(cfg.h_schedule[*s]).into(),
                Cell::Empty,
                Cell::Empty,
                "error".into(),
                msg.clone().into(),
            ]),
        }
        if *s + 1 == cfg.h_schedule.len() {
            let ratios: Vec<f64> = group.iter().map(|r| r.ratio).collect();
            let (pick, kind) = match first_stable(&ratios) {
                Some(i) => (Some(group[i]), "e_P"),
                None => (group.last().copied(), "no-limit"),
            };
            let mut row = vec![name.into(), cfg.e[*e].into()];
            match pick {
                Some(r) => row.extend([
                    r.steps_per_period.into(),
                    r.h.into(),
                    r.dtheta.into(),
                    r.ratio.into(),
                ]),
                None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            row.push(kind.into());
            row.push(Cell::Empty);
            table.push(row);
        }
    }
    Ok(Output::Table(table))
}

pub const ENVELOPE_COLUMNS: &[&str] = &[
    "curve",
    "order",
    "e",
    "steps_per_period",
    "force_evals",
    "error",
    "note",
];

pub fn envelope(cfg: &BenchConfig) -> Result<Output> {
    require_eccentric(cfg)?;
    if cfg.backend == Backend::Double {
        if let Some(o) = cfg.orders.iter().find(|&&o| o >= 10) {
            return Err(CliError::Precision(format!(
                "order {o} needs --backend extended; double precision cannot resolve errors \
                 of that order above roundoff"
            )));
        }
    }
    let base = cfg.base()?;
    let specs = cfg
        .orders
        .iter()
        .map(|&o| {
            Ok(MethodSpec::Mpe {
                base,
                seq: mpsplit::natural_sequence(o as usize / 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = sweep(cfg, &specs)?;
    let mut table = Table::new("envelope/1", ENVELOPE_COLUMNS);
    let mut points: BTreeMap<usize, Vec<(u64, f64, u32, u64)>> = BTreeMap::new();
    for ((m, e, s), rec) in &cells {
        let order = cfg.orders[*m];
        match rec {
            Ok(r) => {
                let err = r.dtheta.abs();
                table.push(vec![
                    "order".into(),
                    order.into(),
                    r.e.into(),
                    r.steps_per_period.into(),
                    r.force_evals.into(),
                    err.into(),
                    Cell::Empty,
                ]);
                points
                    .entry(*e)
                    .or_default()
                    .push((r.force_evals, err, order, r.steps_per_period));
            }
            Err(msg) => table.push(vec![
                "order".into(),
                order.into(),
                cfg.e[*e].into(),
                cfg.h_schedule[*s].into(),
                Cell::Empty,
                Cell::Empty,
                msg.clone().into(),
            ]),
        }
    }
    for (e, pts) in points {
        for (n, err, order, steps) in lower_envelope(pts) {
            table.push(vec![
                "envelope".into(),
                order.into(),
                cfg.e[e].into(),
                steps.into(),
                n.into(),
                err.into(),
                Cell::Empty,
            ]);
        }
    }
    Ok(Output::Table(table))
}

/// Points not beaten by any point of equal or smaller cost, in increasing
/// cost. Errors along the result strictly decrease.
pub fn lower_envelope(mut pts: Vec<(u64, f64, u32, u64)>) -> Vec<(u64, f64, u32, u64)> {
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for p in pts {
        if p.1 < best {
            best = p.1;
            out.push(p);
        }
    }
    out
}

pub const ORDER_COLUMNS: &[&str] = &["method", "system", "e", "slope", "points", "min_error"];

pub fn order(cfg: &BenchConfig) -> Result<Output> {
    let specs = cfg.methods()?;
    let systems: Vec<(System, Cell)> = match cfg.system {
        SystemKind::Harmonic => vec![(System::Harmonic, Cell::Empty)],
        SystemKind::Kepler => cfg
            .e
            .iter()
            .map(|&e| (System::Kepler { e }, e.into()))
            .collect(),
    };
    let keys: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|m| (0..systems.len()).map(move |s| (m, s)))
        .collect();
    let fits = pool(cfg)?.install(|| {
        keys.par_iter()
            .map(|&(m, s)| {
                let spec = &specs[m];
                let sys = systems[s].0;
                match cfg.backend {
                    Backend::Double => measured_order(&spec.prepare::<f64>(), sys, &cfg.h_schedule),
                    Backend::Extended => {
                        measured_order(&spec.prepare::<DoubleDouble>(), sys, &cfg.h_schedule)
                    }
                }
                .map_err(|e| CliError::Numeric(format!("{spec}: {e}")))
            })
            .collect::<Vec<_>>()
    });
    let mut table = Table::new("order/1", ORDER_COLUMNS);
    for (&(m, s), fit) in keys.iter().zip(fits) {
        let fit = fit?;
        let min = fit.errors.iter().cloned().fold(f64::INFINITY, f64::min);
        let system = match cfg.system {
            SystemKind::Harmonic => "harmonic",
            SystemKind::Kepler => "kepler",
        };
        table.push(vec![
            specs[m].to_string().into(),
            system.into(),
            systems[s].1.clone(),
            fit.slope.into(),
            (fit.errors.len() as u64).into(),
            min.into(),
        ]);
    }
    Ok(Output::Table(table))
}

pub const INTEGRATE_HARMONIC_COLUMNS: &[&str] =
    &["period", "time", "q", "v", "energy", "force_evals"];
pub const INTEGRATE_KEPLER_COLUMNS: &[&str] = &[
    "period",
    "time",
    "qx",
    "qy",
    "vx",
    "vy",
    "energy",
    "lrl_angle",
    "force_evals",
];

pub fn integrate_cmd(cfg: &BenchConfig) -> Result<Output> {
    let spec = &cfg.methods()?[0];
    match cfg.backend {
        Backend::Double => integrate_in::<f64>(cfg, spec),
        Backend::Extended => integrate_in::<DoubleDouble>(cfg, spec),
    }
}

fn integrate_in<T: Real>(cfg: &BenchConfig, spec: &MethodSpec) -> Result<Output> {
    let method = spec.prepare::<T>();
    let steps = cfg.steps_per_period;
    let h = period_step::<T>(steps);
    let (mut s, field, mut table) = match cfg.system {
        SystemKind::Harmonic => (
            PhaseState::new(vec![T::one()], vec![T::zero()])?,
            harmonic_field::<T>(),
            Table::new("integrate-harmonic/1", INTEGRATE_HARMONIC_COLUMNS),
        ),
        SystemKind::Kepler => (
            kepler_init::<T>(cfg.e[0])?,
            kepler_field::<T>(),
            Table::new("integrate-kepler/1", INTEGRATE_KEPLER_COLUMNS),
        ),
    };
    let lrl0 = match cfg.system {
        SystemKind::Kepler => Some(lrl_vector(&s)?),
        SystemKind::Harmonic => None,
    };
    for period in 1..=cfg.periods {
        let run = integrate(&method, &s, h, steps, &field)
            .map_err(|e| CliError::Numeric(format!("period {period}: {e}")))?;
        s = run.final_state;
        let time = (h * T::from_i64((period * steps) as i64)).to_f64();
        let mut row: Vec<Cell> = vec![period.into(), time.into()];
        row.extend(s.q.iter().chain(&s.v).map(|x| Cell::Float(x.to_f64())));
        match lrl0 {
            Some(a0) => {
                row.push(energy(&s)?.to_f64().into());
                row.push(signed_angle(a0, lrl_vector(&s)?).into());
            }
            None => {
                let half = T::from_f64(0.5);
                row.push((half * (s.q[0] * s.q[0] + s.v[0] * s.v[0])).to_f64().into());
            }
        }
        row.push(field.count().into());
        table.push(row);
    }
    Ok(Output::Table(table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_keeps_only_improving_points() {
        let pts = vec![
            (75, 2.4, 4, 25),
            (150, 0.75, 6, 25),
            (150, 0.63, 4, 50),
            (300, 0.9, 8, 30),
            (600, 0.004, 4, 200),
        ];
        let env = lower_envelope(pts);
        let costs: Vec<u64> = env.iter().map(|p| p.0).collect();
        assert_eq!(costs, vec![75, 150, 600]);
        assert_eq!(env[1].2, 4);
    }
}
