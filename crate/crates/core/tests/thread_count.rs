//! Parallel maps reduce in a fixed order, so the thread count never changes
//! a result.
#![cfg(feature = "parallel")]

use hylosolve_core::checkers::{audit, lower_bound_slack};
use hylosolve_core::functionals::PenaltyParams;
use hylosolve_core::{Grid, ModelSpec, ModelTag, WSpec};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let spec =
        ModelSpec::new(ModelTag::Nls, Grid::line(256, 30.0).unwrap(), WSpec::single_power(1.0, 1.0, 4.0).unwrap()).unwrap();
    let params = PenaltyParams::new(0.03, 0.02, 3.0).unwrap();
    let run = || {
        let cert = serde_json::to_string(&audit(&spec, None, 300, 4)).unwrap();
        (cert, lower_bound_slack(&spec, &params, 200, 4))
    };
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    assert_eq!(one, four);
}
