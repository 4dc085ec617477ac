use dirichlab::operator::*;
use dirichlab::symbols::Symbol;
fn main() {
    let cusp = Symbol::<f64>::cusp_map();
    for (order, rho) in [(256usize, 0.99f64), (256, 0.995), (384, 0.99)] {
        let m = build_matrix(&cusp, order, 0.0, rho).unwrap();
        let s = singular_values(&m);
        print!("N={order} rho={rho}: ");
        for n in [1usize, 5, 10, 20, 40, 60, 80, 100, 150, 200] {
            if n <= order { print!("s{}={:.3e} ", n, s.values[n-1]); }
        }
        println!();
    }
}
