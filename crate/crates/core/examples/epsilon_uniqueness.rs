//! Epsilon-differentiated tolls leave the optimum as the only equilibrium.
//! Also shows the road partition at a routing that deviates from it.

use mixtoll::analysis::partition_roads;
use mixtoll::equilibrium::{enumerate_equilibria, EQ_TOL};
use mixtoll::model::{AffineLatency, Network, Routing, SUPPORT_TOL};
use mixtoll::optimal::{make_acyclic, solve_optimal, SolveMode};
use mixtoll::tolling::{epsilon_differentiated_tolls, EpsilonTollParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = Network::parallel(
        vec!["human".into(), "autonomous".into()],
        vec![
            AffineLatency::new(vec![2.0, 1.0], 0.0)?,
            AffineLatency::new(vec![1.0, 2.0], 0.0)?,
            AffineLatency::new(vec![1.0, 1.0], 3.0)?,
        ],
        vec![1.0, 1.0],
    )?;
    let opt = solve_optimal(&net, SolveMode::Exact)?;
    let z_star = make_acyclic(&net, &opt.routing, SUPPORT_TOL)?;
    println!(
        "z* = {:?}, C* = {}",
        z_star.edge_flows.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        opt.cost
    );

    for eps in [1e-1, 1e-2, 1e-3] {
        let params = EpsilonTollParams { epsilon: Some(eps), ..Default::default() };
        let tolls = epsilon_differentiated_tolls(&net, &z_star, params)?;
        let set = enumerate_equilibria(&net, &tolls, EQ_TOL)?;
        let meta = tolls.epsilon_meta().expect("epsilon schedule");
        println!(
            "eps={eps:<6} mu={:.3} P={:.3}  equilibria={}  distance to z*={:.2e}",
            meta.mu,
            meta.big_p,
            set.equilibria.len(),
            set.equilibria[0].routing.max_abs_diff(&z_star)
        );
    }

    let tolls = epsilon_differentiated_tolls(&net, &z_star, EpsilonTollParams::new(1.0, 0.01))?;
    let deviation = Routing::from_rows(&[vec![0.25, 1.0], vec![0.75, 0.0], vec![0.0, 0.0]]);
    let d = partition_roads(&net, &tolls, &deviation)?;
    println!("deviation: I1={:?} I2={:?} I3={:?} contradiction={}", d.i1, d.i2, d.i3, d.contradiction);
    println!("standard costs {:.4?}, flags {:?}", d.standard_costs, d.lemma_flags);
    Ok(())
}
