use std::hash::Hasher;

use fnv::FnvHasher;
use proptest::prelude::*;

use aura_core::canvas::{Canvas, CanvasSpec};

fn oracle(canvas: &Canvas) -> u64 {
    let mut h = FnvHasher::default();
    for px in canvas.rgb() {
        h.write(px);
    }
    h.finish()
}

fn small(w: f64, h: f64) -> Canvas {
    Canvas::new(CanvasSpec { width_mm: w, height_mm: h, px_per_mm: 1.0 }).unwrap()
}

#[test]
fn blank_canvas_matches_reference_fnv() {
    let c = small(2.0, 2.0);
    assert_eq!(c.digest(), oracle(&c));
    let big = Canvas::new(CanvasSpec::default()).unwrap();
    assert_eq!(big.digest(), oracle(&big));
}

#[test]
fn ppm_round_trip_keeps_digest() {
    let mut c = small(7.0, 5.0);
    c.set_pixel(3, 2, [1, 2, 3], None);
    let back = Canvas::from_ppm(*c.spec(), &c.export_ppm()).unwrap();
    assert_eq!(back.digest(), c.digest());
    assert_eq!(back.rgb(), c.rgb());
}

proptest! {
    #[test]
    fn painted_canvas_matches_reference_fnv(
        w in 2usize..24, h in 2usize..24,
        writes in prop::collection::vec((0usize..24, 0usize..24, any::<[u8; 3]>()), 0..64),
    ) {
        let mut c = small(w as f64, h as f64);
        for (x, y, rgb) in writes {
            if x < w && y < h {
                c.set_pixel(x, y, rgb, None);
            }
        }
        prop_assert_eq!(c.digest(), oracle(&c));
        prop_assert_eq!(c.digest_hex(), format!("{:016x}", oracle(&c)));
    }
}
