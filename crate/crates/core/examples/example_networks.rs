//! The two-road networks at several asymmetry levels: optimum, worst
//! untolled equilibrium and worst equilibrium under anonymous tolls.

use mixtoll::equilibrium::{worst_equilibrium, EQ_TOL};
use mixtoll::fixtures::{example_a, example_b};
use mixtoll::model::{Network, TollSchedule};
use mixtoll::optimal::{solve_optimal, SolveMode};
use mixtoll::tolling::anonymous_tolls;

fn summarize(label: &str, net: &Network) -> Result<(), Box<dyn std::error::Error>> {
    let opt = solve_optimal(net, SolveMode::Exact)?;
    let untolled = worst_equilibrium(net, &TollSchedule::zeros(net), EQ_TOL)?;
    let tolls = anonymous_tolls(net, &opt.routing)?;
    let tolled = worst_equilibrium(net, &tolls, EQ_TOL)?;
    println!(
        "{label:<12} C*={:.4}  worst untolled={:.4} (PoA {:.3})  anonymous tolls={:?}  worst tolled={:.4} (PoA {:.3})",
        opt.cost,
        untolled.cost,
        untolled.cost / opt.cost,
        tolls.rows().iter().map(|r| r[0]).collect::<Vec<_>>(),
        tolled.cost,
        tolled.cost / opt.cost,
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [1.5, 2.0, 3.0, 4.0] {
        summarize(&format!("(a) k={k}"), &example_a(k))?;
    }
    for k in [1.5, 2.0, 3.0, 4.0] {
        summarize(&format!("(b) k={k}"), &example_b(k))?;
    }
    Ok(())
}
