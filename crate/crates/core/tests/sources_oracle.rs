//! Validates the closed-form jitter-averaged mode overlap against direct
//! numerical quadrature of the Gaussian overlap integral.

mod common;

use swapsim_core::sources::mode_overlap;

#[test]
fn mode_overlap_matches_quadrature_oracle() {
    let taus = [
        (2286.45f64, 2286.45),
        (2286.45, 304.86),
        (304.86, 304.86),
        (900.0, 2286.45),
    ];
    let delays = [0.0f64, 200.0, 1000.0, 3000.0];
    let jitters = [0.0f64, 130.0, 260.0, 900.0];

    for &(t1, t2) in &taus {
        for &d in &delays {
            for &j in &jitters {
                let closed = mode_overlap(d, j, t1, t2).unwrap().value();
                let oracle = common::mode_overlap_quadrature(d, j, t1, t2);
                if oracle > 1e-12 {
                    let rel = (closed - oracle).abs() / oracle;
                    assert!(
                        rel < 1e-6,
                        "relative error {rel:.2e} at delay={d} jitter={j} taus=({t1},{t2}): \
                         closed={closed:.12e} oracle={oracle:.12e}"
                    );
                } else {
                    assert!(closed < 1e-10);
                }
            }
        }
    }
}

#[test]
fn paper_like_point_against_oracle() {
    // 260 fs jitter between 0.4 nm filtered photons.
    let closed = mode_overlap(0.0f64, 260.0, 2286.45, 2286.45).unwrap().value();
    let oracle = common::mode_overlap_quadrature(0.0, 260.0, 2286.45, 2286.45);
    assert!((closed - oracle).abs() / oracle < 1e-6);
    assert!(closed >= 0.95);
}
