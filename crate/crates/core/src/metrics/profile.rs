use super::{MetricsError, MetricsReport};

/// Navigation results after exploring with a given budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub budget_m: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub agent: String,
    pub budget_m: f64,
    pub spl: f64,
    pub success_rate: f64,
    pub coverage: f64,
    /// Not dominated by any row of any agent.
    pub pareto: bool,
}

impl ProfileRow {
    /// Budget is a cost; SPL, success rate and coverage are gains.
    pub fn dominates(&self, other: &ProfileRow) -> bool {
        let no_worse = self.budget_m <= other.budget_m
            && self.spl >= other.spl
            && self.success_rate >= other.success_rate
            && self.coverage >= other.coverage;
        let better = self.budget_m < other.budget_m
            || self.spl > other.spl
            || self.success_rate > other.success_rate
            || self.coverage > other.coverage;
        no_worse && better
    }
}

/// Flattens per-agent budget profiles into one table and flags the rows on
/// the joint Pareto front.
pub fn exploration_profile(
    agents: &[(String, Vec<ProfilePoint>)],
) -> Result<Vec<ProfileRow>, MetricsError> {
    let mut rows = Vec::new();
    for (agent, points) in agents {
        for (i, p) in points.iter().enumerate() {
            if i > 0 && p.budget_m <= points[i - 1].budget_m {
                return Err(MetricsError::BudgetOrder {
                    agent: agent.clone(),
                    previous: points[i - 1].budget_m,
                    budget: p.budget_m,
                });
            }
            let coverage = p.report.coverage.ok_or_else(|| MetricsError::MissingCoverage {
                agent: agent.clone(),
                budget: p.budget_m,
            })?;
            rows.push(ProfileRow {
                agent: agent.clone(),
                budget_m: p.budget_m,
                spl: p.report.spl,
                success_rate: p.report.success_rate,
                coverage,
                pareto: false,
            });
        }
    }
    let flags: Vec<bool> = rows
        .iter()
        .map(|r| !rows.iter().any(|q| q.dominates(r)))
        .collect();
    for (r, f) in rows.iter_mut().zip(flags) {
        r.pareto = f;
    }
    Ok(rows)
}
