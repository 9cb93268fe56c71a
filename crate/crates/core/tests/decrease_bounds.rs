use dstab_core::get_problem;
use dstab_core::math::logspace;
use dstab_core::vector::axpy;

fn bound_holds(points: &[Vec<f64>], alpha_bar: f64) -> bool {
    let p = get_problem("ellipse:a=2,b=1").unwrap();
    let g = p.primary_g().unwrap();
    let field = p.descent_field();
    let (a, b) = (2.0, 1.0);
    points.iter().all(|x| {
        let gx = g.eval(x);
        let rate = a * b * (a - b) / (4.0 * (a * a * x[0] * x[0] + b * b * x[1] * x[1]));
        field.evaluate(x).unwrap().directions.iter().all(|u| {
            logspace(alpha_bar * 1e-3, alpha_bar, 8).into_iter().all(|alpha| {
                g.eval(&axpy(x, alpha, u)) <= gx * (-rate * alpha * alpha).exp() * (1.0 + 1e-12)
            })
        })
    })
}

#[test]
fn ellipse_multiplicative_decrease() {
    let p = get_problem("ellipse:a=2,b=1").unwrap();
    let region = p.lyapunov_region.clone().unwrap();
    let grid = region.sample_n(10_000, 1).unwrap();
    let mut alpha_bar = 0.1;
    let mut halvings = 0;
    while !bound_holds(&grid, alpha_bar) {
        alpha_bar /= 2.0;
        halvings += 1;
        assert!(halvings < 30, "no admissible step cap");
    }
    let fresh = region.sample_n(2_000, 2).unwrap();
    assert!(bound_holds(&fresh, alpha_bar), "calibrated cap {alpha_bar} fails on fresh samples");
    println!("calibrated alpha_bar = {alpha_bar} after {halvings} halvings");
}
