//! Strategy costs, capacitor accounting and the moving-average predictor.
//!
//! cargo run --example energy_budget

use seeker::energy::{comm_energy, predict_power, CostTable, Energy, MessageKind, NodeEnergyState, Strategy};

fn main() -> seeker::Result<()> {
    let table = CostTable::default();
    println!("strategy  sensor  comm   total (uJ)");
    for s in [Strategy::D0, Strategy::D1, Strategy::D2, Strategy::D3, Strategy::D4] {
        let r = table.row(s).unwrap();
        println!("{:<8}  {:>6.2}  {:>5.2}  {:>5.2}", s.name(), r.sensor_uj, r.comm_uj, r.total_uj());
    }
    for bytes in [0, 24, 42, 240] {
        println!("payload of {bytes:>3} B: {:.3} uJ", comm_energy(bytes, MessageKind::Payload));
    }

    let mut cap = NodeEnergyState::new(Energy::from_uj(10.0), Energy::from_uj(12.0), 0.0, 16)?;
    let out = cap.step(Energy::from_uj(5.0), Energy::ZERO, 0.001)?;
    println!("10 uJ + 5 uJ into a 12 uJ capacitor: {} stored, {} discarded", cap.stored().uj(), out.discarded.uj());
    match cap.spend(Energy::from_uj(20.0)) {
        Err(e) => println!("spending 20 uJ: {e}"),
        Ok(()) => unreachable!(),
    }

    let history = [0.0, 10.0, 0.0, 10.0];
    println!("predicted income over 0.6 s: {:.2} uJ", predict_power(&history, 16, 0.6));
    Ok(())
}
