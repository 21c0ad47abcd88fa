use ribe_core::estimate::instances::{compare, Variant};

#[test]
fn estimators_agree_with_grid_search() {
    for variant in Variant::ALL {
        let mut worst = 0.0f64;
        let start = std::time::Instant::now();
        for index in 0..30 {
            let c = compare(variant, 2024, index).unwrap();
            assert!(c.feasible, "{} #{index}: infeasible {:?}", variant.name(), c);
            assert!(c.loglik_advantage >= -1e-6, "{} #{index}: {:?}", variant.name(), c);
            assert!(c.tv <= 2e-3, "{} #{index}: {:?}", variant.name(), c);
            worst = worst.max(c.tv);
        }
        println!("{}: worst merged TV {worst:.2e} ({:.1?})", variant.name(), start.elapsed());
    }
}
