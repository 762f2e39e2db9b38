//! SSP-RK2 time stepping of all modes at once, CFL bound and run records.

use rayon::prelude::*;

use crate::coupling::{assemble_sources, extract_guard_flux, GuardFluxRecord};
use crate::error::{Error, Result};
use crate::fvm::{compute_current, divergence};
use crate::model::{init_density, ModeId, Scenario};

/// Largest total-mass change tolerated in a single step.
pub const STEP_MASS_TOL: f64 = 1e-9;

/// One cell-centered field per mode (scenario order) plus the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDensity {
    pub fields: Vec<Vec<f64>>,
    pub t: f64,
}

impl HybridDensity {
    pub fn zeros(scenario: &Scenario) -> Self {
        Self {
            fields: scenario.modes().iter().map(|m| vec![0.0; m.mesh().n_cells()]).collect(),
            t: 0.0,
        }
    }

    /// Mass of every mode, in scenario order.
    pub fn mode_masses(&self, scenario: &Scenario) -> Vec<f64> {
        scenario
            .modes()
            .iter()
            .zip(&self.fields)
            .map(|(m, f)| crate::diagnostics::mass(f, m.mesh()))
            .collect()
    }

    pub fn total_mass(&self, scenario: &Scenario) -> f64 {
        self.mode_masses(scenario).iter().sum()
    }

    /// Smallest value over the active cells of every mode.
    pub fn min_value(&self, scenario: &Scenario) -> f64 {
        scenario
            .modes()
            .iter()
            .zip(&self.fields)
            .flat_map(|(m, f)| m.mesh().active_cells().map(move |c| f[c]))
            .fold(f64::INFINITY, f64::min)
    }

    fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        let modes = scenario.modes();
        if self.fields.len() != modes.len() {
            return Err(Error::SizeMismatch {
                expected: modes.len(),
                actual: self.fields.len(),
            });
        }
        for (m, f) in modes.iter().zip(&self.fields) {
            if f.len() != m.mesh().n_cells() {
                return Err(Error::SizeMismatch {
                    expected: m.mesh().n_cells(),
                    actual: f.len(),
                });
            }
        }
        Ok(())
    }
}

/// Guard outflow and deposited source mass of one right-hand-side evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageBalance {
    pub t: f64,
    /// Sum of all guard flux rates.
    pub outflow: f64,
    /// Sum over modes of the integrated source density.
    pub deposited: f64,
}

impl StageBalance {
    /// `|deposited - outflow| / |outflow|`, or the absolute gap when there is
    /// no outflow.
    pub fn relative_error(&self) -> f64 {
        let gap = (self.deposited - self.outflow).abs();
        if self.outflow == 0.0 {
            gap
        } else {
            gap / self.outflow.abs()
        }
    }
}

/// Time derivative of every mode together with its flux balance.
pub fn rhs_with_balance(fields: &[Vec<f64>], scenario: &Scenario, t: f64) -> Result<(Vec<Vec<f64>>, StageBalance)> {
    let modes = scenario.modes();
    let per_mode: Vec<(Vec<f64>, Vec<GuardFluxRecord>)> = modes
        .par_iter()
        .zip(fields.par_iter())
        .map(|(mode, field)| {
            let flux = compute_current(mode, field)?;
            let records = if mode.reset().is_some() {
                extract_guard_flux(mode, &flux)?
            } else {
                Vec::new()
            };
            Ok((divergence(&flux, mode), records))
        })
        .collect::<Result<_>>()?;

    let (divs, records): (Vec<_>, Vec<_>) = per_mode.into_iter().unzip();
    let sources = assemble_sources(scenario, &records)?;
    let outflow = records.iter().flatten().map(|r| r.rate).sum();
    let deposited = modes
        .iter()
        .zip(&sources)
        .map(|(m, s)| s.iter().sum::<f64>() * m.mesh().cell_volume())
        .sum();

    let rates = divs
        .into_iter()
        .zip(sources)
        .map(|(div, src)| src.iter().zip(&div).map(|(s, d)| s - d).collect())
        .collect();
    Ok((
        rates,
        StageBalance {
            t,
            outflow,
            deposited,
        },
    ))
}

/// `-div Y + s` for every mode.
pub fn rhs(state: &HybridDensity, scenario: &Scenario) -> Result<Vec<Vec<f64>>> {
    state.check_shape(scenario)?;
    rhs_with_balance(&state.fields, scenario, state.t).map(|(r, _)| r)
}

fn axpy(u: &[Vec<f64>], dt: f64, l: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter()
        .zip(l)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + dt * y).collect())
        .collect()
}

/// One SSP-RK2 (Heun) step of `du/dt = L(u)`, with `L` given as a closure
/// taking the stage time.
pub fn ssp_rk2_update<F>(u: &[Vec<f64>], t: f64, dt: f64, mut l: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[Vec<f64>], f64) -> Result<Vec<Vec<f64>>>,
{
    let u1 = axpy(u, dt, &l(u, t)?);
    let u2 = axpy(&u1, dt, &l(&u1, t + dt)?);
    Ok(u
        .iter()
        .zip(&u2)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * x + 0.5 * y).collect())
        .collect())
}

/// Advance the hybrid density by `dt`; returns the new state and the flux
/// balance of both stages.
pub fn ssp_rk2_step(state: &HybridDensity, scenario: &Scenario, dt: f64) -> Result<(HybridDensity, [StageBalance; 2])> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    state.check_shape(scenario)?;
    let mut balances = Vec::with_capacity(2);
    let fields = ssp_rk2_update(&state.fields, state.t, dt, |u, t| {
        let (r, b) = rhs_with_balance(u, scenario, t)?;
        balances.push(b);
        Ok(r)
    })?;
    let next = HybridDensity {
        fields,
        t: state.t + dt,
    };
    let drift = next.total_mass(scenario) - state.total_mass(scenario);
    if drift.is_nan() || drift.abs() > STEP_MASS_TOL {
        return Err(Error::MassDrift { drift });
    }
    Ok((next, [balances[0], balances[1]]))
}

/// Largest stable time step: the minimum over modes and axes of the
/// advective bound `dx / max|v|` and the diffusive bound
/// `dx^2 / (2 d sigma^2 / 2)`. Infinite when nothing moves.
pub fn cfl_dt(scenario: &Scenario) -> f64 {
    let mut bound = f64::INFINITY;
    for mode in scenario.modes() {
        let mesh = mode.mesh();
        let d = mode.dim() as f64;
        let diff = 0.5 * mode.sigma() * mode.sigma();
        for axis in 0..mode.dim() {
            let dx = mesh.spacing(axis);
            let vmax = mode
                .face_velocity(axis)
                .iter()
                .enumerate()
                .filter(|(f, _)| mode.faces().kind(axis, *f).is_some())
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            if vmax > 0.0 {
                bound = bound.min(dx / vmax);
            }
            if diff > 0.0 {
                bound = bound.min(dx * dx / (2.0 * d * diff));
            }
        }
    }
    bound
}

/// Per-sample mode masses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MassSeries {
    pub mode_ids: Vec<ModeId>,
    pub times: Vec<f64>,
    /// `masses[sample][mode]`.
    pub masses: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

impl MassSeries {
    pub fn new(mode_ids: Vec<ModeId>) -> Self {
        Self {
            mode_ids,
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, masses: Vec<f64>) {
        self.totals.push(masses.iter().sum());
        self.times.push(t);
        self.masses.push(masses);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mass trajectory of one mode.
    pub fn mode(&self, id: ModeId) -> Option<Vec<f64>> {
        let k = self.mode_ids.iter().position(|m| *m == id)?;
        Some(self.masses.iter().map(|row| row[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub fields: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub series: MassSeries,
    pub snapshots: Vec<Snapshot>,
    /// Minimum active-cell density after every sample.
    pub min_density: Vec<f64>,
    /// Flux balance of every stage, two per step.
    pub balance: Vec<StageBalance>,
}

/// Stateful stepper over a scenario.
#[derive(Debug, Clone)]
pub struct Solver {
    scenario: Scenario,
    state: HybridDensity,
    step: usize,
}

impl Solver {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let state = init_density(&scenario)?;
        Ok(Self {
            scenario,
            state,
            step: 0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &HybridDensity {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.scenario.t_final() == 0.0 || self.step >= self.scenario.n_steps()
    }

    /// Take one step of the scenario's `dt`.
    pub fn step(&mut self) -> Result<[StageBalance; 2]> {
        let (next, balance) = ssp_rk2_step(&self.state, &self.scenario, self.scenario.dt()).map_err(|e| {
            Error::StepFailed {
                step: self.step + 1,
                source: Box::new(e),
            }
        })?;
        self.step += 1;
        // Pin the clock to the grid of step times.
        self.state = HybridDensity {
            t: self.step as f64 * self.scenario.dt(),
            ..next
        };
        Ok(balance)
    }
}

/// Integrate from the initial density to `T`, sampling masses every step and
/// snapshots every `snapshot_stride` steps (and at the final step).
pub fn run(scenario: &Scenario) -> Result<RunRecord> {
    let mut solver = Solver::new(scenario.clone())?;
    let n = if scenario.t_final() == 0.0 { 0 } else { scenario.n_steps() };
    let stride = scenario.snapshot_stride();
    let mut record = RunRecord {
        series: MassSeries::new(scenario.mode_ids()),
        snapshots: Vec::new(),
        min_density: Vec::with_capacity(n + 1),
        balance: Vec::with_capacity(2 * n),
    };
    let sample = |solver: &Solver, record: &mut RunRecord| {
        let s = solver.state();
        record.series.push(s.t, s.mode_masses(scenario));
        record.min_density.push(s.min_value(scenario));
        let k = solver.steps_taken();
        if k.is_multiple_of(stride) || k == n {
            record.snapshots.push(Snapshot {
                step: k,
                t: s.t,
                fields: s.fields.clone(),
            });
        }
    };
    sample(&solver, &mut record);
    for _ in 0..n {
        record.balance.extend(solver.step()?);
        sample(&solver, &mut record);
    }
    log::info!(
        "run finished: {n} steps, final total mass {:.15}",
        record.series.totals.last().copied().unwrap_or(f64::NAN)
    );
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Grid1D, LineEnd, Mesh};
    use crate::model::{CflMode, Drift, InitialSpec, McSettings, ModeSpec};
    use approx::assert_abs_diff_eq;

    fn line_mode(n: usize, sigma: f64, drift: Drift) -> ModeSpec {
        let mesh = Mesh::Line {
            grid: Grid1D::unit(n).unwrap(),
            left: LineEnd::Reflecting,
            right: LineEnd::Reflecting,
        };
        ModeSpec::new(ModeId(1), mesh, drift, sigma, None).unwrap()
    }

    fn single(mode: ModeSpec, t: f64, steps: usize) -> Scenario {
        Scenario::new(
            vec![mode],
            InitialSpec {
                mode: ModeId(1),
                mean: vec![0.4],
                variance: vec![0.01],
            },
            t,
            steps,
            1,
            McSettings {
                n_particles: 1,
                seed: 0,
            },
            CflMode::Error,
        )
        .unwrap()
    }

    #[test]
    fn cfl_pure_diffusion_value() {
        let s = single(line_mode(10, 0.1, Drift::Zero), 0.1, 1);
        assert_abs_diff_eq!(cfl_dt(&s), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cfl_unbounded_without_motion() {
        let s = single(line_mode(10, 0.0, Drift::Zero), 1.0, 1);
        assert_eq!(cfl_dt(&s), f64::INFINITY);
    }

    #[test]
    fn zero_horizon_gives_single_sample() {
        let s = single(line_mode(20, 0.1, Drift::Zero), 0.0, 1);
        let r = run(&s).unwrap();
        assert_eq!(r.series.len(), 1);
        assert_eq!(r.snapshots.len(), 1);
        assert_abs_diff_eq!(r.series.totals[0], 1.0, epsilon = 1e-14);
        assert!(r.balance.is_empty());
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let s = single(line_mode(20, 0.1, Drift::Zero), 0.1, 10);
        let state = HybridDensity {
            fields: vec![vec![1.0; 20]],
            t: 0.0,
        };
        let (next, _) = ssp_rk2_step(&state, &s, 0.01).unwrap();
        for v in &next.fields[0] {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_source_is_integrated_exactly() {
        let u = vec![vec![0.5, -1.0, 2.0]];
        let c = [0.3, 1.7, -2.2];
        let out = ssp_rk2_update(&u, 0.0, 0.125, |_, _| Ok(vec![c.to_vec()])).unwrap();
        for k in 0..3 {
            assert_eq!(out[0][k], u[0][k] + 0.125 * c[k]);
        }
        // du/dt = t integrates exactly too.
        let out = ssp_rk2_update(&[vec![0.0]], 1.0, 0.5, |_, t| Ok(vec![vec![t]])).unwrap();
        assert_abs_diff_eq!(out[0][0], 0.5 * (1.5f64.powi(2) - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn diffusion_rate_matches_three_point_stencil() {
        let s = single(line_mode(10, 0.2, Drift::Zero), 0.1, 10);
        let f: Vec<f64> = (0..10).map(|i| ((i * i) % 7) as f64).collect();
        let r = rhs(
            &HybridDensity {
                fields: vec![f.clone()],
                t: 0.0,
            },
            &s,
        )
        .unwrap();
        let d = 0.02 / 0.01;
        for i in 1..9 {
            assert_abs_diff_eq!(r[0][i], d * (f[i - 1] - 2.0 * f[i] + f[i + 1]), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r[0][0], d * (f[1] - f[0]), epsilon = 1e-12);
    }

    #[test]
    fn rk2_order_on_smooth_diffusion() {
        let mode = line_mode(50, 0.3, Drift::Zero);
        let final_state = |steps: usize| {
            let s = single(mode.clone(), 0.1, steps);
            let r = run(&s.with_snapshot_stride(steps).unwrap()).unwrap();
            r.snapshots.last().unwrap().fields[0].clone()
        };
        let a = final_state(50);
        let b = final_state(100);
        let c = final_state(200);
        let e1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        let e2: f64 = b.iter().zip(&c).map(|(x, y)| (x - y).abs()).sum();
        let slope = (e1 / e2).log2();
        assert!((1.7..=2.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn reruns_are_bit_identical() {
        let s = single(line_mode(30, 0.1, Drift::Zero), 0.2, 40);
        assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }

    #[test]
    fn step_errors_carry_index() {
        let s = single(line_mode(10, 0.1, Drift::Zero), 0.1, 10);
        let mut solver = Solver::new(s).unwrap();
        solver.step().unwrap();
        solver.state.fields[0][3] = f64::NAN;
        match solver.step().unwrap_err() {
            Error::StepFailed { step, source } => {
                assert_eq!(step, 2);
                assert!(matches!(*source, Error::NonFiniteFlux { .. }));
            }
            e => panic!("unexpected {e}"),
        }
    }
}
