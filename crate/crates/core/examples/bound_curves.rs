//! Upper and lower PoA bound curves over the asymmetry level, as CSV.

use mixtoll::analysis::{anonymous_bound, lambda_bound, lower_bound_curves};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("k,lambda_untolled,anonymous_upper,lower_a,lower_b,lower_anonymous_unrestricted,anonymous_better");
    for i in 0..=30 {
        let k = 1.0 + 0.1 * f64::from(i);
        let (lam, anon) = (lambda_bound(k)?, anonymous_bound(k)?);
        let c = lower_bound_curves(k)?;
        println!(
            "{k:.2},{lam:.6},{anon:.6},{:.6},{:.6},{:.6},{}",
            c.untolled_a,
            c.untolled_b,
            c.anonymous_unrestricted_ratio,
            anon < lam
        );
    }
    Ok(())
}
