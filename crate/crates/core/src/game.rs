//! Flat strategy-variable view of a network shared by the optimizer and the
//! equilibrium enumerator. Each variable is the flow of one commodity on one
//! of its strategies; strategy costs are affine in the variables.

use nalgebra::{DMatrix, DVector};

use crate::model::{Network, Routing, TollSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Var {
    pub commodity: usize,
    pub strategy: usize,
    pub type_idx: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct StrategyGame<'a> {
    pub network: &'a Network,
    pub vars: Vec<Var>,
    /// First variable index of each commodity.
    pub offsets: Vec<usize>,
    /// `coupling[(v, u)]`: marginal untolled cost of strategy `v` per unit of `u`.
    pub coupling: DMatrix<f64>,
    /// Sum of intercepts along each strategy.
    pub base: DVector<f64>,
}

impl<'a> StrategyGame<'a> {
    pub fn new(network: &'a Network) -> Self {
        let mut vars = Vec::new();
        let mut offsets = Vec::new();
        for (c, com) in network.commodities().iter().enumerate() {
            offsets.push(vars.len());
            for s in 0..com.strategies.len() {
                vars.push(Var { commodity: c, strategy: s, type_idx: com.type_idx });
            }
        }
        let nv = vars.len();
        let roads = network.roads();
        let edges_of = |v: &Var| &network.commodities()[v.commodity].strategies[v.strategy];
        let coupling = DMatrix::from_fn(nv, nv, |a, b| {
            let (va, vb) = (&vars[a], &vars[b]);
            let eb = edges_of(vb);
            edges_of(va).iter().filter(|e| eb.contains(e)).map(|&e| roads[e].slopes()[vb.type_idx]).sum()
        });
        let base =
            DVector::from_iterator(nv, vars.iter().map(|v| edges_of(v).iter().map(|&e| roads[e].intercept()).sum()));
        Self { network, vars, offsets, coupling, base }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.offsets.len()
    }

    pub fn demand(&self, commodity: usize) -> f64 {
        self.network.commodities()[commodity].demand
    }

    pub fn vars_of(&self, commodity: usize) -> std::ops::Range<usize> {
        let start = self.offsets[commodity];
        let end = self.offsets.get(commodity + 1).copied().unwrap_or(self.vars.len());
        start..end
    }

    pub fn strategy_edges(&self, v: usize) -> &[usize] {
        let var = &self.vars[v];
        &self.network.commodities()[var.commodity].strategies[var.strategy]
    }

    /// Toll paid along each strategy.
    pub fn toll_vector(&self, tolls: &TollSchedule) -> DVector<f64> {
        DVector::from_iterator(
            self.num_vars(),
            (0..self.num_vars())
                .map(|v| self.strategy_edges(v).iter().map(|&e| tolls.get(e, self.vars[v].type_idx)).sum::<f64>()),
        )
    }

    /// Untolled strategy costs at `x`.
    pub fn costs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coupling * x + &self.base
    }

    pub fn social_cost(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.costs(x))
    }

    /// Hessian of the social cost, `K + K^T`.
    pub fn hessian(&self) -> DMatrix<f64> {
        &self.coupling + self.coupling.transpose()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.hessian() * x + &self.base
    }

    pub fn split(&self, x: &DVector<f64>) -> Vec<Vec<f64>> {
        (0..self.num_commodities()).map(|c| self.vars_of(c).map(|v| x[v]).collect()).collect()
    }

    pub fn flatten(&self, groups: &[Vec<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.num_vars(), groups.iter().flatten().copied())
    }

    pub fn routing(&self, x: &DVector<f64>) -> Routing {
        Routing::from_strategy_flows(self.network, &self.split(x))
    }
}
