use super::{BinOp, Expr, Func, Var};

// Folding constructors. They only fire on literal constants and identity
// elements so values never change where the original tree was defined.

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn is(e: &Expr, v: f64) -> bool {
    e.as_const() == Some(v)
}

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, Box::new(l), Box::new(r))
}

fn add(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(x), Some(y)) => c(x + y),
        (Some(0.0), _) => r,
        (_, Some(0.0)) => l,
        _ => bin(BinOp::Add, l, r),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(x), Some(y)) => c(x - y),
        (Some(0.0), _) => neg(r),
        (_, Some(0.0)) => l,
        _ => bin(BinOp::Sub, l, r),
    }
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(x), Some(y)) => c(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => c(0.0),
        (Some(1.0), _) => r,
        (_, Some(1.0)) => l,
        (Some(-1.0), _) => neg(r),
        (_, Some(-1.0)) => neg(l),
        _ => bin(BinOp::Mul, l, r),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    if is(&r, 1.0) {
        return l;
    }
    if is(&l, 0.0) {
        return c(0.0);
    }
    bin(BinOp::Div, l, r)
}

fn pow(base: Expr, exponent: Expr) -> Expr {
    if is(&exponent, 1.0) {
        return base;
    }
    if is(&exponent, 0.0) {
        return c(1.0);
    }
    bin(BinOp::Pow, base, exponent)
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Const(v) => c(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn call(f: Func, arg: Expr) -> Expr {
    Expr::Call(f, Box::new(arg))
}

pub(super) fn derivative(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return c(0.0);
    }
    match e {
        Expr::Const(_) => c(0.0),
        Expr::Var(w) => c(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(u) => neg(derivative(u, v)),
        Expr::Binary(op, l, r) => {
            let (u, w) = (l.as_ref(), r.as_ref());
            match op {
                BinOp::Add => add(derivative(u, v), derivative(w, v)),
                BinOp::Sub => sub(derivative(u, v), derivative(w, v)),
                BinOp::Mul => add(
                    mul(derivative(u, v), w.clone()),
                    mul(u.clone(), derivative(w, v)),
                ),
                BinOp::Div => {
                    if !w.depends_on(v) {
                        div(derivative(u, v), w.clone())
                    } else {
                        div(
                            sub(
                                mul(derivative(u, v), w.clone()),
                                mul(u.clone(), derivative(w, v)),
                            ),
                            pow(w.clone(), c(2.0)),
                        )
                    }
                }
                BinOp::Pow => {
                    if !w.depends_on(v) {
                        // d(u^n) = n u^(n-1) u'
                        let lowered = match w.as_const() {
                            Some(n) => c(n - 1.0),
                            None => sub(w.clone(), c(1.0)),
                        };
                        mul(mul(w.clone(), pow(u.clone(), lowered)), derivative(u, v))
                    } else if !u.depends_on(v) {
                        // d(b^w) = b^w ln(b) w'
                        mul(mul(e.clone(), call(Func::Ln, u.clone())), derivative(w, v))
                    } else {
                        // d(u^w) = u^w (w' ln u + w u' / u)
                        mul(
                            e.clone(),
                            add(
                                mul(derivative(w, v), call(Func::Ln, u.clone())),
                                div(mul(w.clone(), derivative(u, v)), u.clone()),
                            ),
                        )
                    }
                }
            }
        }
        Expr::Call(f, arg) => {
            let inner = derivative(arg, v);
            let outer = match f {
                Func::Sqrt => div(c(0.5), e.clone()),
                Func::Sin => call(Func::Cos, arg.as_ref().clone()),
                Func::Cos => neg(call(Func::Sin, arg.as_ref().clone())),
                Func::Exp => e.clone(),
                Func::Ln => div(c(1.0), arg.as_ref().clone()),
                // u / |u|, undefined at u = 0
                Func::Abs => div(arg.as_ref().clone(), e.clone()),
            };
            mul(outer, inner)
        }
    }
}
