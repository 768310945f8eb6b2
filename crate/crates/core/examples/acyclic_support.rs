//! Removing cycles from the support graph of an optimal routing without
//! changing road totals or cost.

use mixtoll::model::{AffineLatency, Network, Routing, SupportGraph, SUPPORT_TOL};
use mixtoll::optimal::make_acyclic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = Network::parallel(
        vec!["a".into(), "b".into(), "c".into()],
        (0..3).map(|_| AffineLatency::new(vec![1.0, 1.0, 1.0], 0.0)).collect::<Result<_, _>>()?,
        vec![1.0, 1.0, 1.0],
    )?;
    let third = 1.0 / 3.0;
    let z = Routing::from_rows(&vec![vec![third; 3]; 3]);
    let before = SupportGraph::of(&z, SUPPORT_TOL);
    println!("before: {} edges, cycle {:?}", before.edges().len(), before.shortest_cycle());
    let a = make_acyclic(&net, &z, SUPPORT_TOL)?;
    let after = SupportGraph::of(&a, SUPPORT_TOL);
    println!("after:  {} edges, acyclic {}", after.edges().len(), after.is_acyclic());
    println!("cost {} -> {}", net.social_cost(&z)?, net.social_cost(&a)?);
    for row in a.edge_flows.row_iter() {
        println!("  {:.4?}", row.iter().collect::<Vec<_>>());
    }
    Ok(())
}
