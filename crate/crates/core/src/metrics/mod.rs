//! SPL and the auxiliary measures reported next to it.

mod profile;

use std::fmt;

use thiserror::Error;

pub use profile::{exploration_profile, ProfilePoint, ProfileRow};

use crate::episode::{EpisodeRecord, Termination};
use crate::scenario::GoalKind;
use crate::LENGTH_EPS;

/// Thresholds on the efficiency curve: 0, 0.05, ..., 1.
pub const CURVE_POINTS: usize = 21;
pub const HISTOGRAM_BINS: usize = 20;
/// Success thresholds swept by default, meters.
pub const DEFAULT_TAUS: [f64; 5] = [0.1, 0.2, 0.4, 0.8, 1.6];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("SPL is undefined over zero episodes")]
    NoEpisodes,
    #[error("episode {scene_id}/{episode_id} has non-positive optimal length {length}")]
    BadLength {
        scene_id: String,
        episode_id: u64,
        length: f64,
    },
    #[error("episode {scene_id}/{episode_id} has invalid path length {length}")]
    BadPath {
        scene_id: String,
        episode_id: u64,
        length: f64,
    },
    #[error("success threshold must be positive, got {0}")]
    BadTau(f64),
    #[error("profile for {agent:?}: budgets must be strictly increasing ({budget} follows {previous})")]
    BudgetOrder {
        agent: String,
        previous: f64,
        budget: f64,
    },
    #[error("profile for {agent:?}: budget {budget} has no coverage figure")]
    MissingCoverage { agent: String, budget: f64 },
}

/// One row of per-episode results, the unit all measures are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub scene_id: String,
    pub episode_id: u64,
    pub goal_kind: GoalKind,
    pub success: bool,
    pub path_length: f64,
    pub geodesic_length: f64,
    pub final_distance: f64,
    pub steps: u32,
    pub rotations: u32,
    pub infractions: u32,
    pub termination: Termination,
    /// Coverage of a preceding exploration phase, when there was one.
    pub coverage: Option<f64>,
}

impl From<&EpisodeRecord> for EpisodeSummary {
    fn from(r: &EpisodeRecord) -> Self {
        Self {
            scene_id: r.scenario.scene_id.clone(),
            episode_id: r.scenario.episode_id,
            goal_kind: r.scenario.goal.kind(),
            success: r.success,
            path_length: r.path_length_m,
            geodesic_length: r.geodesic_length_m,
            final_distance: r.final_geodesic_to_goal_m,
            steps: r.steps,
            rotations: r.rotations,
            infractions: r.infractions,
            termination: r.termination,
            coverage: None,
        }
    }
}

impl EpisodeSummary {
    /// `l / max(p, l)`.
    pub fn efficiency(&self) -> f64 {
        self.geodesic_length / self.path_length.max(self.geodesic_length)
    }

    /// This episode's SPL term.
    pub fn spl_term(&self) -> f64 {
        if self.success {
            self.efficiency()
        } else {
            0.0
        }
    }

    /// Success re-judged at threshold `tau`. Only point goals depend on the
    /// threshold; other goals keep their recorded outcome.
    pub fn success_at(&self, tau: f64) -> bool {
        match self.goal_kind {
            GoalKind::Point => {
                self.termination == Termination::DoneSignal
                    && self.final_distance < tau - LENGTH_EPS
            }
            _ => self.success,
        }
    }

    fn key(&self) -> String {
        format!("{}/{}", self.scene_id, self.episode_id)
    }
}

fn check_rows(rows: &[EpisodeSummary]) -> Result<(), MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::NoEpisodes);
    }
    for r in rows {
        if !(r.geodesic_length > 0.0 && r.geodesic_length.is_finite()) {
            return Err(MetricsError::BadLength {
                scene_id: r.scene_id.clone(),
                episode_id: r.episode_id,
                length: r.geodesic_length,
            });
        }
        if !(r.path_length >= 0.0 && r.path_length.is_finite()) {
            return Err(MetricsError::BadPath {
                scene_id: r.scene_id.clone(),
                episode_id: r.episode_id,
                length: r.path_length,
            });
        }
    }
    Ok(())
}

/// Mean over episodes of `S * l / max(p, l)`.
pub fn spl(rows: &[EpisodeSummary]) -> Result<f64, MetricsError> {
    check_rows(rows)?;
    Ok(rows.iter().map(|r| r.spl_term()).sum::<f64>() / rows.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPoint {
    pub tau: f64,
    pub spl: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSweep {
    pub points: Vec<TauPoint>,
    /// Rows whose success does not depend on the threshold (area and object
    /// goals).
    pub fixed_rows: usize,
}

pub fn tau_sweep(rows: &[EpisodeSummary], taus: &[f64]) -> Result<TauSweep, MetricsError> {
    check_rows(rows)?;
    if let Some(&bad) = taus.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(MetricsError::BadTau(bad));
    }
    let n = rows.len() as f64;
    let points = taus
        .iter()
        .map(|&tau| {
            let (mut spl, mut hits) = (0.0, 0usize);
            for r in rows {
                if r.success_at(tau) {
                    spl += r.efficiency();
                    hits += 1;
                }
            }
            TauPoint {
                tau,
                spl: spl / n,
                success_rate: hits as f64 / n,
            }
        })
        .collect();
    Ok(TauSweep {
        points,
        fixed_rows: rows
            .iter()
            .filter(|r| r.goal_kind != GoalKind::Point)
            .count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Values that entered the statistics.
    pub count: usize,
}

impl Stats {
    /// Ignores non-finite values.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self::default();
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            max: v[n - 1],
            count: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_episodes: usize,
    pub spl: f64,
    pub success_rate: f64,
    pub final_distance: Stats,
    /// Final distance divided by the episode's optimal length.
    pub final_distance_normalized: Stats,
    /// Counts of successful-episode efficiencies in 20 equal bins over [0, 1].
    pub efficiency_histogram: [usize; HISTOGRAM_BINS],
    /// `(t, fraction of all episodes that succeeded with efficiency >= t)`.
    pub efficiency_curve: Vec<(f64, f64)>,
    pub tau_sweep: TauSweep,
    pub infractions: Stats,
    pub steps: Stats,
    pub rotations: Stats,
    pub coverage: Option<f64>,
    pub rows: Vec<EpisodeSummary>,
}

impl MetricsReport {
    pub fn total_infractions(&self) -> u64 {
        self.rows.iter().map(|r| r.infractions as u64).sum()
    }
}

/// SPL plus every auxiliary measure over one set of episodes.
pub fn aux_report(rows: &[EpisodeSummary], taus: &[f64]) -> Result<MetricsReport, MetricsError> {
    let spl_value = spl(rows)?;
    let n = rows.len() as f64;
    let success_rate = rows.iter().filter(|r| r.success).count() as f64 / n;
    assert!(spl_value <= success_rate + 1e-12);

    let mut histogram = [0usize; HISTOGRAM_BINS];
    for r in rows.iter().filter(|r| r.success) {
        let bin = ((r.efficiency() * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    let efficiency_curve = (0..CURVE_POINTS)
        .map(|i| {
            let t = i as f64 / (CURVE_POINTS - 1) as f64;
            let hits = rows
                .iter()
                .filter(|r| r.success && r.efficiency() >= t - 1e-12)
                .count();
            (t, hits as f64 / n)
        })
        .collect();
    let coverages: Vec<f64> = rows.iter().filter_map(|r| r.coverage).collect();

    Ok(MetricsReport {
        n_episodes: rows.len(),
        spl: spl_value,
        success_rate,
        final_distance: Stats::of(rows.iter().map(|r| r.final_distance)),
        final_distance_normalized: Stats::of(
            rows.iter().map(|r| r.final_distance / r.geodesic_length),
        ),
        efficiency_histogram: histogram,
        efficiency_curve,
        tau_sweep: tau_sweep(rows, taus)?,
        infractions: Stats::of(rows.iter().map(|r| r.infractions as f64)),
        steps: Stats::of(rows.iter().map(|r| r.steps as f64)),
        rotations: Stats::of(rows.iter().map(|r| r.rotations as f64)),
        coverage: (!coverages.is_empty())
            .then(|| coverages.iter().sum::<f64>() / coverages.len() as f64),
        rows: rows.to_vec(),
    })
}

impl fmt::Display for EpisodeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} success={} p={} l={} term={}",
            self.key(),
            self.success,
            self.path_length,
            self.geodesic_length,
            self.termination
        )
    }
}
