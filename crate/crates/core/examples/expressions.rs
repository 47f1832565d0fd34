use trimap::expr::parse;
use trimap::{PlanarFn, ScalarFn};

fn main() {
    let f = ScalarFn::parse("abs(u)^0.5 + 2*u^2").unwrap();
    println!("f(-4) = {}", f.eval(-4.0).unwrap());
    println!("f'(1) = {}", f.derivative_at(1.0).unwrap());
    println!("f(f(1)) = {}", f.iterate(2).eval(1.0).unwrap());

    match ScalarFn::parse("1/u").unwrap().eval(0.0) {
        Ok(v) => println!("1/0 = {v}"),
        Err(e) => println!("1/u at 0: {e} (pole: {})", e.is_pole()),
    }
    match ScalarFn::parse("2*(u+") {
        Ok(_) => unreachable!(),
        Err(e) => println!("parse error: {e}"),
    }

    let g = PlanarFn::parse("x*(4 - x*y)/6").unwrap();
    println!("g(1, 2) = {}", g.eval(1.0, 2.0).unwrap());
    let ast = parse("exp(ln(x)) + sqrt(x^2)", &["x"]).unwrap();
    println!("{ast} at x=0.3: {:?}", ast.eval(&[("x", 0.3)]));
}
