use super::instance::{Instance, ModelError};
use super::solution::ClearingSolution;

/// `sum_i lambda_i P_i x_i + sum_{c,h} lambda_hc P_hc x_hc + sum_{j,t} lambda_j P^t_j y_j`.
pub fn welfare(instance: &Instance, solution: &ClearingSolution) -> Result<f64, ModelError> {
    solution.check_dimensions(instance)?;
    Ok(welfare_unchecked(instance, solution))
}

pub(crate) fn welfare_unchecked(instance: &Instance, solution: &ClearingSolution) -> f64 {
    let hourly: f64 = instance
        .hourly_bids
        .iter()
        .zip(&solution.hourly_acceptance)
        .map(|(b, x)| b.limit_price * b.power * x)
        .sum();
    let mic: f64 = instance
        .mic_bids
        .iter()
        .zip(&solution.suborder_acceptance)
        .flat_map(|(c, xs)| c.suborders.iter().zip(xs))
        .map(|(s, x)| s.limit_price * s.power * x)
        .sum();
    let blocks: f64 = instance
        .block_bids
        .iter()
        .zip(&solution.block_acceptance)
        .map(|(b, y)| b.limit_price * b.total_power() * y)
        .sum();
    hourly + mic + blocks
}

/// Buy-side traded volume: executed power of all positive-power orders.
pub fn traded_volume(instance: &Instance, solution: &ClearingSolution) -> Result<f64, ModelError> {
    solution.check_dimensions(instance)?;
    Ok(traded_volume_unchecked(instance, solution))
}

pub(crate) fn traded_volume_unchecked(instance: &Instance, solution: &ClearingSolution) -> f64 {
    let hourly: f64 = instance
        .hourly_bids
        .iter()
        .zip(&solution.hourly_acceptance)
        .filter(|(b, _)| b.power > 0.0)
        .map(|(b, x)| b.power * x)
        .sum();
    // MIC suborders are sell-only and never contribute.
    let blocks: f64 = instance
        .block_bids
        .iter()
        .zip(&solution.block_acceptance)
        .map(|(b, y)| b.powers.iter().filter(|p| **p > 0.0).sum::<f64>() * y)
        .sum();
    hourly + blocks
}

/// Half the executed absolute power. Equals [`traded_volume`] whenever every
/// balance row holds and net imports sum to zero in each period.
pub fn traded_volume_half_abs(
    instance: &Instance,
    solution: &ClearingSolution,
) -> Result<f64, ModelError> {
    solution.check_dimensions(instance)?;
    let hourly: f64 = instance
        .hourly_bids
        .iter()
        .zip(&solution.hourly_acceptance)
        .map(|(b, x)| b.power.abs() * x)
        .sum();
    let mic: f64 = instance
        .mic_bids
        .iter()
        .zip(&solution.suborder_acceptance)
        .flat_map(|(c, xs)| c.suborders.iter().zip(xs))
        .map(|(s, x)| s.power.abs() * x)
        .sum();
    let blocks: f64 = instance
        .block_bids
        .iter()
        .zip(&solution.block_acceptance)
        .map(|(b, y)| b.total_abs_power() * y)
        .sum();
    Ok(0.5 * (hourly + mic + blocks))
}

/// Surplus position of one block at the solution prices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSurplusTerms {
    /// `sum_t P^t (lambda - pi_t)`; positive means in the money.
    pub gain: f64,
    /// Foregone gain if the block is rejected while in the money.
    pub opportunity_cost: f64,
    /// Loss if the block is accepted while out of the money.
    pub loss: f64,
}

pub fn block_surplus_terms(
    instance: &Instance,
    solution: &ClearingSolution,
    block: usize,
) -> BlockSurplusTerms {
    let b = &instance.block_bids[block];
    let gain: f64 = b
        .active_periods()
        .map(|(t, p)| p * (b.limit_price - solution.price(b.location, t)))
        .sum();
    let accepted = solution.block_accepted(block);
    BlockSurplusTerms {
        gain,
        opportunity_cost: if accepted { 0.0 } else { gain.max(0.0) },
        loss: if accepted { (-gain).max(0.0) } else { 0.0 },
    }
}

/// Sum of true opportunity costs of all rejected in-the-money blocks.
pub fn total_opportunity_cost(instance: &Instance, solution: &ClearingSolution) -> f64 {
    (0..instance.block_bids.len())
        .map(|j| block_surplus_terms(instance, solution, j).opportunity_cost)
        .sum()
}

/// `sum s_i + sum s_j + sum s_c + sum w_m v_m - sum_{accepted} d^a_j`.
pub fn dual_objective(instance: &Instance, solution: &ClearingSolution) -> f64 {
    let s: f64 = solution.hourly_surplus.iter().sum::<f64>()
        + solution.block_surplus.iter().sum::<f64>()
        + solution.mic_surplus.iter().sum::<f64>();
    let network: f64 = instance
        .network
        .rows
        .iter()
        .zip(&solution.network_duals)
        .map(|(row, v)| row.capacity * v)
        .sum();
    let losses: f64 = solution
        .block_loss_bound
        .iter()
        .enumerate()
        .filter(|(j, _)| solution.block_accepted(*j))
        .map(|(_, d)| d)
        .sum();
    s + network - losses
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_market;

    fn case_i() -> (Instance, ClearingSolution) {
        let inst = toy_market();
        let mut sol = ClearingSolution::zeros(&inst, 50.0);
        sol.hourly_acceptance = vec![10.0 / 11.0, 0.0];
        sol.block_acceptance = vec![1.0, 0.0];
        (inst, sol)
    }

    fn case_ii() -> (Instance, ClearingSolution) {
        let inst = toy_market();
        let mut sol = ClearingSolution::zeros(&inst, 10.0);
        sol.hourly_acceptance = vec![1.0, 9.0 / 14.0];
        sol.block_acceptance = vec![0.0, 1.0];
        (inst, sol)
    }

    #[test]
    fn toy_welfare_matches_market_outcome_table() {
        let (inst, sol) = case_i();
        assert!((welfare(&inst, &sol).unwrap() - 450.0).abs() < 1e-9);
        let (inst, sol) = case_ii();
        assert!((welfare(&inst, &sol).unwrap() - 440.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_has_no_welfare_or_volume() {
        let inst = toy_market();
        let sol = ClearingSolution::zeros(&inst, 0.0);
        assert_eq!(welfare(&inst, &sol).unwrap(), 0.0);
        assert_eq!(traded_volume(&inst, &sol).unwrap(), 0.0);
    }

    #[test]
    fn toy_volumes() {
        let (inst, sol) = case_i();
        assert!((traded_volume(&inst, &sol).unwrap() - 10.0).abs() < 1e-9);
        assert!((traded_volume_half_abs(&inst, &sol).unwrap() - 10.0).abs() < 1e-9);
        let (inst, sol) = case_ii();
        assert!((traded_volume(&inst, &sol).unwrap() - 20.0).abs() < 1e-9);
        assert!((traded_volume_half_abs(&inst, &sol).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn toy_opportunity_costs() {
        let (inst, sol) = case_i();
        let d = block_surplus_terms(&inst, &sol, 1);
        assert_eq!(d.opportunity_cost, 800.0);
        assert_eq!(total_opportunity_cost(&inst, &sol), 800.0);
        let (inst, sol) = case_ii();
        assert_eq!(block_surplus_terms(&inst, &sol, 0).opportunity_cost, 50.0);
    }

    #[test]
    fn at_the_money_block_has_no_gain_or_loss() {
        let inst = toy_market();
        let mut sol = ClearingSolution::zeros(&inst, 5.0);
        sol.block_acceptance = vec![1.0, 0.0];
        let c = block_surplus_terms(&inst, &sol, 0);
        assert_eq!((c.gain, c.loss, c.opportunity_cost), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let inst = toy_market();
        let mut sol = ClearingSolution::zeros(&inst, 0.0);
        sol.hourly_acceptance.pop();
        assert!(matches!(
            welfare(&inst, &sol),
            Err(ModelError::DimensionMismatch(_))
        ));
        assert!(traded_volume(&inst, &sol).is_err());
    }
}
