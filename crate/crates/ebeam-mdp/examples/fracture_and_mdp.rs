//! Full shot-level preparation flow: rasterize a polygonal target,
//! fracture it into machine rectangles, knock the shots out of place, and
//! let the projected-gradient loop pull them back.

use ebeam_mdp::fracture::{fracture, rasterize, BinaryMask};
use ebeam_mdp::model::{EblParams, Shot, ShotBounds, ShotSet};
use ebeam_mdp::opt::{mdp_optimize, OptConfig, UpdateFrom};

fn main() {
    let m = 96;

    // A T-shaped pattern: wide bar on top, stem below.
    let mut mask = BinaryMask::new(m, m);
    for (x0, y0, w, h) in [(24usize, 56usize, 48usize, 14usize), (40, 24, 16, 32)] {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                mask.set(x, y, true);
            }
        }
    }

    let bounds = ShotBounds::default();
    let shots = fracture(&mask, &bounds, 1.2).expect("pattern fits the shot bounds");
    assert_eq!(rasterize(&shots), mask, "fracture covers the mask exactly");
    println!("fractured the target into {} shots:", shots.len());
    for s in shots.iter() {
        println!("  {}x{} at ({}, {})", s.w, s.h, s.x, s.y);
    }

    // Perturb geometry to emulate an imported, badly registered job deck.
    let drift = [(4.0, -3.0), (-3.0, 4.0), (3.0, 3.0), (-4.0, -3.0)];
    let init = ShotSet::new(
        shots
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let (dx, dy) = drift[k % drift.len()];
                Shot::new(s.x + dx, s.y + dy, s.w - dx, s.h + dy, s.dose, s.q)
            })
            .collect(),
        m,
    );

    let ebl = EblParams {
        sigma_f: 3.0,
        sigma_b: 12.0,
        ..EblParams::default()
    };
    let cfg = OptConfig {
        epochs: 300,
        lr: 5e-4,
        update_from: UpdateFrom::Raw,
        ..OptConfig::default()
    };
    let target = mask.to_field();
    let (best, trace) =
        mdp_optimize(&init, &target, &ebl, &bounds, &cfg).expect("descent runs to completion");

    let first = trace.epochs.first().unwrap().report;
    let at_best = trace.epochs[trace.best_epoch - 1].report;
    println!(
        "\nfidelity: {:.2} -> {:.2} ({:.0}% of the initial misfit left, best at epoch {})",
        first.l2,
        at_best.l2,
        100.0 * at_best.l2 / first.l2,
        trace.best_epoch
    );
    println!("recovered shots:");
    for s in best.iter() {
        println!("  {}x{} at ({}, {}), dose {:.3}", s.w, s.h, s.x, s.y, s.dose);
    }
}
