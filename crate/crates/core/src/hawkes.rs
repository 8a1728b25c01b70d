//! Marked Hawkes process with exponential kernel `h(t, y) = y e^{-beta t}`.
//!
//! Two independent samplers: Ogata-style thinning on the intensity, and the
//! Poisson-cluster (branching) construction.

use rand::Rng;
use rand_distr::{Distribution as _, Exp, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{ensure, Error, Result};

/// Hard cap on events per simulated path or cluster.
pub const EVENT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    /// Baseline intensity.
    pub a: f64,
    /// Decay rate of the kernel.
    pub beta: f64,
    /// Law of the intensity jumps.
    pub shock: DistributionSpec,
}

impl HawkesParams {
    /// Validated, subcritical parameters.
    pub fn new(a: f64, beta: f64, shock: DistributionSpec) -> Result<Self> {
        let p = Self { a, beta, shock };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.a.is_finite() && self.a > 0.0, || {
            format!("baseline a = {} must be > 0", self.a)
        })?;
        ensure(self.beta.is_finite() && self.beta > 0.0, || {
            format!("decay beta = {} must be > 0", self.beta)
        })?;
        self.shock.validate()?;
        self.branching_ratio().map(|_| ())
    }

    /// `mu = E[Y] / beta`, the mean number of direct offspring per event.
    pub fn branching_ratio(&self) -> Result<f64> {
        let ratio = self.shock.mean() / self.beta;
        if ratio >= 1.0 {
            Err(Error::Supercritical { ratio })
        } else {
            Ok(ratio)
        }
    }

    /// Long-run mean intensity `beta a / (beta - E[Y])`.
    pub fn stationary_mean_intensity(&self) -> f64 {
        self.beta * self.a / (self.beta - self.shock.mean())
    }

    /// `E[lambda_t]` started from `lambda0`.
    pub fn expected_intensity(&self, lambda0: f64, t: f64) -> f64 {
        let inf = self.stationary_mean_intensity();
        let k = self.beta - self.shock.mean();
        inf + (lambda0 - inf) * (-k * t).exp()
    }

    /// `E[N_t] = int_0^t E[lambda_s] ds`.
    pub fn expected_count(&self, lambda0: f64, t: f64) -> f64 {
        let inf = self.stationary_mean_intensity();
        let k = self.beta - self.shock.mean();
        inf * t - (lambda0 - inf) * (-k * t).exp_m1() / k
    }
}

/// One event of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub mark: f64,
    /// Intensity just before the event.
    pub intensity_before: f64,
}

/// Offspring of a single base event.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Number of offspring events, base event excluded.
    pub kappa: usize,
    /// Sorted offspring times relative to the base event; `kappa` entries.
    pub offsets: Vec<f64>,
    /// `kappa + 1` marks: the base event's first, then one per offset.
    pub marks: Vec<f64>,
}

impl Cluster {
    /// Time from the base event to the last offspring.
    pub fn length(&self) -> f64 {
        self.offsets.last().copied().unwrap_or(0.0)
    }

    /// Events carrying a claim, base event included.
    pub fn claim_count(&self) -> usize {
        self.kappa + 1
    }
}

/// Piecewise-deterministic intensity `lambda_t`: decays towards `a` at rate
/// `beta` and jumps by a shock at each event. Events fire at rate
/// `multiplier * lambda_t`; the multiplier is one except under tilted measures.
#[derive(Debug, Clone)]
pub struct IntensityPath<'a> {
    a: f64,
    beta: f64,
    shock: &'a DistributionSpec,
    multiplier: f64,
    t: f64,
    lambda: f64,
    events: usize,
}

/// An accepted event of an [`IntensityPath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub lambda_before: f64,
    pub mark: f64,
}

impl<'a> IntensityPath<'a> {
    pub fn new(params: &'a HawkesParams, lambda0: f64) -> Self {
        Self::with_dynamics(params.a, params.beta, &params.shock, 1.0, lambda0)
    }

    pub fn with_dynamics(
        a: f64,
        beta: f64,
        shock: &'a DistributionSpec,
        multiplier: f64,
        lambda0: f64,
    ) -> Self {
        debug_assert!(lambda0 >= a, "thinning bound needs lambda0 >= a");
        Self {
            a,
            beta,
            shock,
            multiplier,
            t: 0.0,
            lambda: lambda0,
            events: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn events(&self) -> usize {
        self.events
    }

    /// Intensity at `s >= time()`, assuming no event in between.
    pub fn lambda_at(&self, s: f64) -> f64 {
        self.a + (self.lambda - self.a) * (-self.beta * (s - self.t)).exp()
    }

    /// Move the state to `s >= time()` after `next_event` found nothing before `s`.
    pub fn advance_to(&mut self, s: f64) {
        debug_assert!(s >= self.t);
        self.lambda = self.lambda_at(s);
        self.t = s;
    }

    /// Next event no later than `horizon`, or `None`. The intensity decays
    /// between events, so its current value bounds it until the next event.
    pub fn next_event<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        horizon: f64,
    ) -> Result<Option<Jump>> {
        loop {
            let bound = self.multiplier * self.lambda;
            if bound <= 0.0 {
                return Ok(None);
            }
            let w: f64 = Exp1.sample(rng);
            let cand = self.t + w / bound;
            if cand > horizon {
                return Ok(None);
            }
            let lambda_c = self.lambda_at(cand);
            self.t = cand;
            self.lambda = lambda_c;
            if rng.random::<f64>() * bound <= self.multiplier * lambda_c {
                self.events += 1;
                if self.events > EVENT_CAP {
                    return Err(Error::EventCapExceeded { cap: EVENT_CAP });
                }
                let mark = self.shock.sample(rng);
                self.lambda += mark;
                return Ok(Some(Jump {
                    time: cand,
                    lambda_before: lambda_c,
                    mark,
                }));
            }
        }
    }
}

/// Event times and marks on `[0, horizon]` by thinning, started at `lambda0 >= a`.
pub fn simulate_thinning<R: Rng + ?Sized>(
    params: &HawkesParams,
    lambda0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<EventRecord>> {
    ensure(lambda0 >= params.a, || {
        format!(
            "initial intensity {lambda0} must be >= baseline {}",
            params.a
        )
    })?;
    let mut path = IntensityPath::new(params, lambda0);
    let mut out = Vec::new();
    while let Some(j) = path.next_event(rng, horizon)? {
        out.push(EventRecord {
            time: j.time,
            mark: j.mark,
            intensity_before: j.lambda_before,
        });
    }
    Ok(out)
}

/// One Galton-Watson cluster: an event with mark `y` has `Poi(y / beta)`
/// children, each delayed `Exp(beta)` from its parent.
pub fn sample_cluster<R: Rng + ?Sized>(params: &HawkesParams, rng: &mut R) -> Result<Cluster> {
    params.branching_ratio()?;
    let delay = Exp::new(params.beta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let base_mark = params.shock.sample(rng);
    let mut events: Vec<(f64, f64)> = Vec::new();
    // breadth-first over (time, mark); `events` doubles as the queue
    let spawn =
        |parent_t: f64, parent_y: f64, events: &mut Vec<(f64, f64)>, rng: &mut R| -> Result<()> {
            let mean = parent_y / params.beta;
            if mean <= 0.0 {
                return Ok(());
            }
            let k = Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng) as usize;
            if events.len() + k > EVENT_CAP {
                return Err(Error::EventCapExceeded { cap: EVENT_CAP });
            }
            for _ in 0..k {
                events.push((parent_t + delay.sample(rng), params.shock.sample(rng)));
            }
            Ok(())
        };
    spawn(0.0, base_mark, &mut events, rng)?;
    let mut head = 0;
    while head < events.len() {
        let (t, y) = events[head];
        spawn(t, y, &mut events, rng)?;
        head += 1;
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut marks = Vec::with_capacity(events.len() + 1);
    marks.push(base_mark);
    marks.extend(events.iter().map(|e| e.1));
    Ok(Cluster {
        kappa: events.len(),
        offsets: events.into_iter().map(|e| e.0).collect(),
        marks,
    })
}

/// Base events of the cluster representation on `[0, horizon]`, each with its cluster.
pub fn sample_base_clusters<R: Rng + ?Sized>(
    params: &HawkesParams,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<(f64, Cluster)>> {
    let gap = Exp::new(params.a).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            return Ok(out);
        }
        out.push((t, sample_cluster(params, rng)?));
    }
}

/// Hawkes path on `[0, horizon]` with `lambda0 = a` from the cluster
/// representation. General `lambda0` is only available through thinning.
pub fn simulate_cluster_process<R: Rng + ?Sized>(
    params: &HawkesParams,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<EventRecord>> {
    let clusters = sample_base_clusters(params, horizon, rng)?;
    Ok(events_from_clusters(params, &clusters, horizon))
}

/// Merge clustered events into one time-ordered path, dropping those past
/// `horizon`, and recompute the pre-event intensity.
pub fn events_from_clusters(
    params: &HawkesParams,
    clusters: &[(f64, Cluster)],
    horizon: f64,
) -> Vec<EventRecord> {
    let mut ev: Vec<(f64, f64)> = clusters
        .iter()
        .flat_map(|(t0, c)| {
            std::iter::once(0.0)
                .chain(c.offsets.iter().copied())
                .zip(c.marks.iter().copied())
                .map(move |(off, y)| (t0 + off, y))
        })
        .filter(|e| e.0 <= horizon)
        .collect();
    ev.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut excess = 0.0;
    let mut last = 0.0;
    ev.into_iter()
        .map(|(t, y)| {
            excess *= (-params.beta * (t - last)).exp();
            last = t;
            let rec = EventRecord {
                time: t,
                mark: y,
                intensity_before: params.a + excess,
            };
            excess += y;
            rec
        })
        .collect()
}
