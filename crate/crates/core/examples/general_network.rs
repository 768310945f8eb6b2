//! A two-origin network with shared edges: differentiated tolls and
//! best-response dynamics.

use mixtoll::equilibrium::{enumerate_equilibria, iterate_best_response, EQ_TOL};
use mixtoll::fixtures::bundled;
use mixtoll::model::TollSchedule;
use mixtoll::optimal::{solve_optimal, SolveMode};
use mixtoll::scenario::parse_scenario;
use mixtoll::tolling::differentiated_tolls;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_scenario(bundled("general_two_od").expect("bundled fixture"))?.network;
    let opt = solve_optimal(&net, SolveMode::Exact)?;
    println!("{} strategy variables, C* = {:.6}", net.num_strategy_vars(), opt.cost);

    let untolled = TollSchedule::zeros(&net);
    let set = enumerate_equilibria(&net, &untolled, EQ_TOL)?;
    println!("untolled equilibria costs: {:.6?}", set.equilibria.iter().map(|e| e.cost).collect::<Vec<_>>());
    let start = set.equilibria[0].routing.clone();

    let tolls = differentiated_tolls(&net, &opt.routing)?;
    let set = enumerate_equilibria(&net, &tolls, EQ_TOL)?;
    println!("tolled equilibria costs:   {:.6?}", set.equilibria.iter().map(|e| e.cost).collect::<Vec<_>>());

    let (z, iters) = iterate_best_response(&net, &tolls, &start, 10_000, 1e-9)?;
    println!(
        "best response from the untolled equilibrium: {iters} sweeps, cost {:.6}, distance to z* {:.2e}",
        net.social_cost(&z)?,
        z.max_abs_diff(&opt.routing)
    );
    Ok(())
}
