//! Seeded randomized check of all bounds, summarized per asymmetry target.

use mixtoll::rng::SeededRng;
use mixtoll::scenario::{generate_instance, InstanceGenSpec};
use mixtoll::validation::validate_instance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for target_k in [1.0, 2.0, 3.0] {
        let (mut passed, mut worst_untolled, mut worst_anon) = (0, 0.0_f64, 0.0_f64);
        let total = 50;
        for i in 0..total {
            let seed = SeededRng::substream(42, i).next_u64();
            let net = generate_instance(&InstanceGenSpec::new(seed, 3, 2).with_target_k(target_k))?;
            let c = validate_instance(&net, 1e-8)?;
            passed += usize::from(c.pass());
            worst_untolled = worst_untolled.max(c.untolled_worst / c.optimal_cost);
            worst_anon = worst_anon.max(c.anonymous_worst / c.optimal_cost);
        }
        println!(
            "target k={target_k}: {passed}/{total} pass, max untolled ratio {worst_untolled:.4}, max anonymous ratio {worst_anon:.4}"
        );
    }
    Ok(())
}
