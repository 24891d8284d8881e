//! Pick the best transmission mode for a fixed two-user drop.

use das_core::geometry::{build_pathloss_matrix, CellLayout, LinkBudget, Position};
use das_core::modes::enumerate_ideal;
use das_core::rate::EvalPolicy;
use das_core::sim::{select_best_mode, Estimator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = CellLayout::circular(2, das_core::default_cell_radius(), 3.0)?;
    let users = [Position::new(-2.5, -2.0), Position::new(3.0, 4.5)];
    let gains = build_pathloss_matrix(&users, &layout)?;
    let candidates = enumerate_ideal(2, 2)?;
    for snr_db in [0.0, 10.0, 20.0, 30.0, 40.0] {
        let (best, rate) = select_best_mode(
            &candidates,
            &gains,
            &LinkBudget::from_snr_db(snr_db),
            Estimator::ClosedForm,
            None,
            &EvalPolicy::default(),
        )?;
        println!("{snr_db:>5} dB: best mode {best} at {rate:.3} bits/s/Hz");
    }
    Ok(())
}
