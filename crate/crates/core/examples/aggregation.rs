//! Single-commodity aggregation of a multitype equilibrium, plus the
//! sampled ratio quantities behind the PoA bounds.

use mixtoll::analysis::{beta_gamma_sampler, sampler_bounds, verify_aggregation};
use mixtoll::equilibrium::{worst_equilibrium, EQ_TOL};
use mixtoll::fixtures::example_b;
use mixtoll::model::TollSchedule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = example_b(4.0);
    let worst = worst_equilibrium(&net, &TollSchedule::zeros(&net), EQ_TOL)?;
    let r = verify_aggregation(&net, &worst.routing)?;
    println!("C(z_hat) = {:.6}, L(f_hat) = {:.6}", r.social_cost, r.l_hat);
    println!("f* = {:.4?}, L(f*) = {:.6}, C(z*) = {:.6}", r.f_star, r.l_star, r.optimal_cost);
    println!("L(f_hat) <= 4/3 L(f*): {}   L(f*) <= k C(z*): {:?}", r.agg_poa_holds, r.opt_bound_holds);

    for k in [1.0, 2.0, 4.0] {
        let got = beta_gamma_sampler(k, 20_000, 3)?;
        let cap = sampler_bounds(k);
        println!(
            "k={k}: beta_ck {:.5} <= {:.5}, beta_l {:.5} <= {:.5}, gamma {:.5} <= {:.5}",
            got.max_beta_ck, cap.max_beta_ck, got.max_beta_l, cap.max_beta_l, got.max_gamma_ck, cap.max_gamma_ck
        );
    }
    Ok(())
}
