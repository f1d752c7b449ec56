// Mittag-Leffler function `E_{gamma,1}` on the negative axis and the
// envelope `(1 + x) E_gamma(-x)`.

use dfdreg::heat::{envelope_constants, mittag_leffler};

pub fn run() -> dfdreg::Result<()> {
    for g in [0.3, 0.5, 0.9, 1.0] {
        let vals: Vec<String> = [-0.5, -5.0, -50.0, -5e3]
            .iter()
            .map(|&z| mittag_leffler(g, z).map(|v| format!("{v:.6e}")))
            .collect::<Result<_, _>>()?;
        println!("gamma {g}: E(-0.5, -5, -50, -5e3) = {}", vals.join(", "));
    }
    // E_{1/2}(-x) = exp(x^2) erfc(x)
    println!("E_0.5(-2) = {:.15}", mittag_leffler(0.5, -2.0)?);
    for g in [0.25, 0.5, 0.75] {
        let (lo, hi) = envelope_constants(g, 1e6)?;
        println!("gamma {g}: (1 + x) E(-x) in [{lo:.4}, {hi:.4}] on [0, 1e6]");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
