//! Every toll scheme on one random three-road instance.

use mixtoll::analysis::poa_report;
use mixtoll::scenario::{generate_instance, InstanceGenSpec};
use mixtoll::tolling::{EpsilonTollParams, TollScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = generate_instance(&InstanceGenSpec::new(11, 3, 2).with_target_k(3.0))?;
    println!("k = {}", net.degree_of_asymmetry());
    let schemes = [
        TollScheme::Untolled,
        TollScheme::Anonymous,
        TollScheme::Differentiated,
        TollScheme::Marginal,
        TollScheme::Epsilon(EpsilonTollParams::default()),
    ];
    for scheme in schemes {
        let r = poa_report(&net, scheme)?;
        let bound = r.bound_value.map_or("-".to_string(), |b| format!("{b:.4}"));
        println!(
            "{:<15} worst={:.6} C*={:.6} ratio={:.6} bound={bound}",
            r.scheme, r.worst_eq_cost, r.optimal_cost, r.empirical_poa
        );
        for (i, row) in r.tolls.rows().iter().enumerate() {
            println!("    road {i}: {row:.4?}");
        }
    }
    Ok(())
}
