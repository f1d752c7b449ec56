// Save and load grid functions and DFD systems in the binary container.

use dfdreg::bench::diagonal_toy;
use dfdreg::dfd::random_in_subspace;
use dfdreg::grid::Subspace;
use dfdreg::io::{load_grid_function, load_system, Container};

pub fn run() -> dfdreg::Result<()> {
    let dir = std::env::temp_dir().join(format!("dfdreg-containers-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (_, sys) = diagonal_toy(32, 1.0)?;
    let x = random_in_subspace(sys.grid(), &Subspace::Full, 5)?;

    let xs = dir.join("x.bin");
    let ss = dir.join("system.bin");
    Container::GridFunction(x.clone()).save(&xs)?;
    Container::System(sys.clone()).save(&ss)?;
    println!("x: {} bytes, system: {} bytes", std::fs::metadata(&xs)?.len(), std::fs::metadata(&ss)?.len());

    assert_eq!(load_grid_function(&xs)?, x);
    assert_eq!(load_system(&ss)?, sys);
    println!("both round trips exact");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
