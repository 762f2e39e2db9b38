//! Euler-Maruyama particle simulation of the hybrid SDE, used as an
//! independent reference for the finite-volume solver.
//!
//! Every particle owns a ChaCha8 substream selected by its index, so results
//! do not depend on how particles are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{LineEnd, Mesh};
use crate::integrate::{MassSeries, Snapshot};
use crate::model::{reset_point, ModeSpec, Scenario};

/// Minimum acceptable rejection-sampling acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

const PILOT_SAMPLES: usize = 20_000;
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    /// Index of the mode in scenario order.
    pub mode: usize,
    /// Position; trailing components beyond the mode dimension are zero.
    pub x: [f64; 2],
}

/// RNG of particle `pid` under `seed`.
pub fn particle_rng(seed: u64, pid: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pid);
    rng
}

/// Whether `x` lies on or beyond a guard of `mode`.
fn in_guard(mode: &ModeSpec, x: [f64; 2]) -> bool {
    match mode.mesh() {
        Mesh::Line { grid, left, right } => {
            (*left == LineEnd::Guard && x[0] <= grid.x_min()) || (*right == LineEnd::Guard && x[0] >= grid.x_max())
        }
        Mesh::Plane(g) => match g.band() {
            Some(eps) => (x[0] - x[1]).abs() <= eps,
            None => {
                let mesh = mode.mesh();
                mesh.contains(x) && !mesh.is_active(mesh.locate(x))
            }
        },
    }
}

/// Mirror once off every reflecting wall; errors when still outside.
fn reflect(mode: &ModeSpec, x: &mut [f64; 2]) -> Result<()> {
    let mesh = mode.mesh();
    let (lo_reflects, hi_reflects) = match mesh {
        Mesh::Line { left, right, .. } => (*left == LineEnd::Reflecting, *right == LineEnd::Reflecting),
        Mesh::Plane(_) => (true, true),
    };
    for k in 0..mesh.dim() {
        let g = mesh.axis(k);
        if lo_reflects && x[k] < g.x_min() {
            x[k] = 2.0 * g.x_min() - x[k];
        } else if hi_reflects && x[k] > g.x_max() {
            x[k] = 2.0 * g.x_max() - x[k];
        }
        if (lo_reflects && x[k] < g.x_min()) || (hi_reflects && x[k] > g.x_max()) {
            return Err(Error::ReflectionOverflow {
                mode: mode.id(),
                position: *x,
            });
        }
    }
    Ok(())
}

/// One Euler-Maruyama step followed by reflection and the guard test.
///
/// Only the first `dim` entries of `noise` are used.
pub fn em_step(scenario: &Scenario, particle: Particle, dt: f64, noise: [f64; 2]) -> Result<Particle> {
    let mode = &scenario.modes()[particle.mode];
    let dim = mode.dim();
    let v = mode.drift().eval(particle.x);
    let scale = mode.sigma() * dt.sqrt();
    let mut x = [0.0; 2];
    for k in 0..dim {
        x[k] = particle.x[k] + v[k] * dt + scale * noise[k];
    }
    reflect(mode, &mut x)?;
    if in_guard(mode, x) {
        let reset = mode.reset().ok_or_else(|| Error::Config(format!("mode {} has no reset", mode.id())))?;
        let (target, image) = reset_point(reset, x);
        return Ok(Particle {
            mode: scenario.mode_index(target)?,
            x: image,
        });
    }
    Ok(Particle { mode: particle.mode, x })
}

fn normal_pair(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 2] {
    let a = rng.sample(StandardNormal);
    let b = if dim > 1 { rng.sample(StandardNormal) } else { 0.0 };
    [a, b]
}

fn propose(scenario: &Scenario, k: usize, rng: &mut ChaCha8Rng) -> Option<Particle> {
    let init = scenario.initial();
    let mode = &scenario.modes()[k];
    let z = normal_pair(rng, mode.dim());
    let mut x = [0.0; 2];
    for d in 0..mode.dim() {
        x[d] = init.mean[d] + init.variance[d].sqrt() * z[d];
    }
    (mode.mesh().contains(x) && !in_guard(mode, x)).then_some(Particle { mode: k, x })
}

/// Acceptance rate of the truncated-Gaussian proposal, estimated on a pilot
/// stream. Errors when below [`MIN_ACCEPTANCE`].
pub fn pilot_acceptance(scenario: &Scenario, seed: u64) -> Result<f64> {
    let k = scenario.mode_index(scenario.initial().mode)?;
    let mut rng = particle_rng(seed, PILOT_STREAM);
    let hits = (0..PILOT_SAMPLES)
        .filter(|_| propose(scenario, k, &mut rng).is_some())
        .count();
    let rate = hits as f64 / PILOT_SAMPLES as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance { rate });
    }
    Ok(rate)
}

/// Draw one particle from the initial Gaussian restricted to the admissible
/// region of the initial mode.
pub fn sample_initial(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Result<Particle> {
    let k = scenario.mode_index(scenario.initial().mode)?;
    let budget = (10.0 / MIN_ACCEPTANCE) as usize;
    for _ in 0..budget {
        if let Some(p) = propose(scenario, k, rng) {
            return Ok(p);
        }
    }
    Err(Error::LowAcceptance { rate: 0.0 })
}

/// Mode fractions at every step and histogram densities at snapshot steps.
#[derive(Debug, Clone, PartialEq)]
pub struct McRecord {
    pub series: MassSeries,
    /// Histograms `count / (N * cell volume)` over all cells of every mode.
    pub snapshots: Vec<Snapshot>,
    pub n_particles: usize,
}

struct Tally {
    /// `counts[step * n_modes + mode]`.
    counts: Vec<u64>,
    /// `hist[snapshot][mode][cell]`.
    hist: Vec<Vec<Vec<u64>>>,
}

impl Tally {
    fn new(scenario: &Scenario, n_samples: usize, n_snapshots: usize) -> Self {
        let modes = scenario.modes();
        Self {
            counts: vec![0; n_samples * modes.len()],
            hist: (0..n_snapshots)
                .map(|_| modes.iter().map(|m| vec![0; m.mesh().n_cells()]).collect())
                .collect(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            for (x, y) in a.iter_mut().zip(b) {
                x.iter_mut().zip(y).for_each(|(u, v)| *u += v);
            }
        }
        self
    }
}

/// Run with the scenario's particle count and seed.
pub fn run_mc(scenario: &Scenario) -> Result<McRecord> {
    let mc = scenario.mc();
    run_mc_with(scenario, mc.n_particles, mc.seed)
}

/// Simulate `n_particles` particles with the PDE time step, sampling at
/// every step.
pub fn run_mc_with(scenario: &Scenario, n_particles: usize, seed: u64) -> Result<McRecord> {
    if n_particles == 0 {
        return Err(Error::invalid("n_particles", "must be at least 1"));
    }
    pilot_acceptance(scenario, seed)?;
    let n = if scenario.t_final() == 0.0 { 0 } else { scenario.n_steps() };
    let dt = scenario.dt();
    let stride = scenario.snapshot_stride();
    let snap_steps: Vec<usize> = (0..=n).filter(|k| k % stride == 0 || *k == n).collect();
    let mut snap_of = vec![None; n + 1];
    for (s, &k) in snap_steps.iter().enumerate() {
        snap_of[k] = Some(s);
    }
    let n_modes = scenario.modes().len();

    let chunk = n_particles.div_ceil(4 * rayon::current_num_threads()).max(1);
    let starts: Vec<usize> = (0..n_particles).step_by(chunk).collect();
    let tally = starts
        .par_iter()
        .map(|&start| -> Result<Tally> {
            let mut t = Tally::new(scenario, n + 1, snap_steps.len());
            for pid in start..(start + chunk).min(n_particles) {
                let mut rng = particle_rng(seed, pid as u64);
                let mut p = sample_initial(scenario, &mut rng)?;
                for (k, snap) in snap_of.iter().enumerate() {
                    if k > 0 {
                        let dim = scenario.modes()[p.mode].dim();
                        p = em_step(scenario, p, dt, normal_pair(&mut rng, dim))?;
                    }
                    t.counts[k * n_modes + p.mode] += 1;
                    if let Some(s) = *snap {
                        let cell = scenario.modes()[p.mode].mesh().locate(p.x);
                        t.hist[s][p.mode][cell] += 1;
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .reduce(Tally::merge)
        .expect("at least one chunk");

    let total = n_particles as f64;
    let mut series = MassSeries::new(scenario.mode_ids());
    for k in 0..=n {
        let row = &tally.counts[k * n_modes..(k + 1) * n_modes];
        series.push(k as f64 * dt, row.iter().map(|&c| c as f64 / total).collect());
    }
    let snapshots = snap_steps
        .iter()
        .zip(tally.hist)
        .map(|(&k, hist)| Snapshot {
            step: k,
            t: k as f64 * dt,
            fields: hist
                .into_iter()
                .zip(scenario.modes())
                .map(|(h, m)| {
                    let scale = 1.0 / (total * m.mesh().cell_volume());
                    h.into_iter().map(|c| c as f64 * scale).collect()
                })
                .collect(),
        })
        .collect();
    Ok(McRecord {
        series,
        snapshots,
        n_particles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mode1_mask, Grid1D};
    use crate::model::{CflMode, Drift, InitialSpec, McSettings, ModeId, Reset};
    use approx::assert_abs_diff_eq;

    fn reference_like(n: usize) -> Scenario {
        let g = Grid1D::unit(n).unwrap();
        let m1 = ModeSpec::new(
            ModeId(1),
            Mesh::Plane(build_mode1_mask(g, g, 0.05).unwrap()),
            Drift::Rotation { alpha: 2.5, gamma: 0.2 },
            0.01,
            Some(Reset::MidpointMerge { target: ModeId(2) }),
        )
        .unwrap();
        let m2 = ModeSpec::new(
            ModeId(2),
            Mesh::Line {
                grid: g,
                left: LineEnd::Reflecting,
                right: LineEnd::Guard,
            },
            Drift::Shift { gamma: 0.2 },
            0.01,
            Some(Reset::PointSplit {
                target: ModeId(1),
                point: [0.5, 0.8],
                delta_width: 3.0 / n as f64,
            }),
        )
        .unwrap();
        Scenario::new(
            vec![m1, m2],
            InitialSpec {
                mode: ModeId(1),
                mean: vec![0.6, 0.2],
                variance: vec![0.008, 0.004],
            },
            0.5,
            500,
            100,
            McSettings {
                n_particles: 500,
                seed: 3,
            },
            CflMode::Error,
        )
        .unwrap()
    }

    #[test]
    fn still_particle_stays() {
        let g = Grid1D::unit(10).unwrap();
        let m = ModeSpec::new(
            ModeId(1),
            Mesh::Line {
                grid: g,
                left: LineEnd::Reflecting,
                right: LineEnd::Reflecting,
            },
            Drift::Zero,
            0.0,
            None,
        )
        .unwrap();
        let s = Scenario::new(
            vec![m],
            InitialSpec {
                mode: ModeId(1),
                mean: vec![0.5],
                variance: vec![0.1],
            },
            1.0,
            10,
            1,
            McSettings {
                n_particles: 1,
                seed: 0,
            },
            CflMode::Error,
        )
        .unwrap();
        let p = Particle { mode: 0, x: [0.37, 0.0] };
        assert_eq!(em_step(&s, p, 0.1, [1.5, -2.0]).unwrap(), p);
    }

    #[test]
    fn mode2_crossing_resets_to_point() {
        let s = reference_like(40);
        let p = Particle { mode: 1, x: [0.999, 0.0] };
        let q = em_step(&s, p, 0.01, [0.0, 0.0]).unwrap();
        assert_eq!(q, Particle { mode: 0, x: [0.5, 0.8] });
    }

    #[test]
    fn mode1_band_entry_merges() {
        let s = reference_like(40);
        // Zero-noise step landing at (0.52, 0.50): place the particle there
        // minus one drift step.
        let target = [0.52, 0.50];
        let dt = 1e-6;
        let v = s.modes()[0].drift().eval(target);
        let start = [target[0] - v[0] * dt, target[1] - v[1] * dt];
        let q = em_step(&s, Particle { mode: 0, x: start }, dt, [0.0, 0.0]).unwrap();
        assert_eq!(q.mode, 1);
        assert_abs_diff_eq!(q.x[0], 0.51, epsilon = 1e-6);
    }

    #[test]
    fn outer_walls_mirror() {
        let s = reference_like(40);
        let q = em_step(&s, Particle { mode: 0, x: [0.02, 0.9] }, 1e-4, [-5.0, 0.0]).unwrap();
        // sigma sqrt(dt) * -5 = -0.0005, the drift vanishes near the wall to first order.
        assert!(q.x[0] > 0.0 && q.mode == 0);
        let q = em_step(&s, Particle { mode: 1, x: [0.0001, 0.0] }, 1e-4, [-20.0, 0.0]).unwrap();
        assert!(q.x[0] > 0.0 && q.mode == 1);
    }

    #[test]
    fn huge_step_overflows() {
        let s = reference_like(40);
        let err = em_step(&s, Particle { mode: 0, x: [0.9, 0.1] }, 1.0, [400.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::ReflectionOverflow { .. }));
    }

    #[test]
    fn fractions_sum_to_one_and_histograms_match() {
        let s = reference_like(40);
        let r = run_mc(&s).unwrap();
        assert_eq!(r.series.len(), 501);
        for row in &r.series.masses {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        for snap in &r.snapshots {
            let row = &r.series.masses[snap.step];
            for (k, m) in s.modes().iter().enumerate() {
                let mass: f64 = snap.fields[k].iter().sum::<f64>() * m.mesh().cell_volume();
                assert_abs_diff_eq!(mass, row[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let s = reference_like(40);
        let a = run_mc_with(&s, 64, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_mc_with(&s, 64, 11).unwrap());
        assert_eq!(a, b);
        let c = run_mc_with(&s, 64, 12).unwrap();
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn initial_samples_are_admissible() {
        let s = reference_like(40);
        for pid in 0..200 {
            let mut rng = particle_rng(5, pid);
            let p = sample_initial(&s, &mut rng).unwrap();
            assert_eq!(p.mode, 0);
            assert!((p.x[0] - p.x[1]).abs() > 0.05);
            assert!((0.0..=1.0).contains(&p.x[0]) && (0.0..=1.0).contains(&p.x[1]));
        }
    }
}
