use std::fmt;

use num_complex::Complex64;

use super::EvalError;

/// Unary functions known to the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Max,
    Min,
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Pi,
    Imag,
    Time,
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

/// How strictly intermediate values are checked during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Principal branches everywhere (`sqrt(-1) = i`).
    Complex,
    /// Reject `sqrt`/`ln`/fractional powers of negative reals.
    Real,
}

/// A parsed scalar expression in the time variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    root: Node,
}

/// Value and time derivative carried through forward-mode evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: Complex64,
    pub deriv: Complex64,
}

const REAL_TOL: f64 = 1e-12;

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= REAL_TOL * (1.0 + z.re.abs())
}

impl ScalarExpr {
    pub fn from_node(root: Node) -> Self {
        ScalarExpr { root }
    }

    pub fn constant(v: f64) -> Self {
        ScalarExpr { root: Node::Const(v) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn time() -> Self {
        ScalarExpr { root: Node::Time }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    pub fn binary(op: BinOp, lhs: ScalarExpr, rhs: ScalarExpr) -> Self {
        ScalarExpr {
            root: Node::Binary(op, Box::new(lhs.root), Box::new(rhs.root)),
        }
    }

    pub fn neg(self) -> Self {
        ScalarExpr {
            root: Node::Neg(Box::new(self.root)),
        }
    }

    pub fn sub(self, rhs: ScalarExpr) -> Self {
        Self::binary(BinOp::Sub, self, rhs)
    }

    pub fn mul(self, rhs: ScalarExpr) -> Self {
        Self::binary(BinOp::Mul, self, rhs)
    }

    pub fn div(self, rhs: ScalarExpr) -> Self {
        Self::binary(BinOp::Div, self, rhs)
    }

    pub fn eval(&self, t: f64) -> Result<Complex64, EvalError> {
        eval_node(&self.root, t, EvalMode::Complex)
    }

    pub fn eval_mode(&self, t: f64, mode: EvalMode) -> Result<Complex64, EvalError> {
        eval_node(&self.root, t, mode)
    }

    /// Real-mode evaluation that also requires a negligible imaginary part.
    pub fn eval_real(&self, t: f64) -> Result<f64, EvalError> {
        let z = eval_node(&self.root, t, EvalMode::Real)?;
        if !is_real(z) {
            return Err(EvalError::NotReal { imag: z.im });
        }
        Ok(z.re)
    }

    /// Exact derivative by forward-mode differentiation of the tree.
    ///
    /// Fails with [`EvalError::Kink`] where the expression is not
    /// differentiable (`abs` at 0, `max`/`min` on a tie with different slopes).
    pub fn eval_dual(&self, t: f64) -> Result<Dual, EvalError> {
        dual_node(&self.root, t)
    }

    pub fn derivative(&self, t: f64) -> Result<Complex64, EvalError> {
        Ok(self.eval_dual(t)?.deriv)
    }
}

fn finite(z: Complex64) -> Result<Complex64, EvalError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn real_int(z: Complex64) -> Option<i32> {
    if z.im == 0.0 && z.re.fract() == 0.0 && z.re.abs() <= 1024.0 {
        Some(z.re as i32)
    } else {
        None
    }
}

fn pow(base: Complex64, exp: Complex64, mode: EvalMode) -> Result<Complex64, EvalError> {
    if let Some(k) = real_int(exp) {
        if base == Complex64::new(0.0, 0.0) && k < 0 {
            return Err(EvalError::DivisionByZero);
        }
        return finite(base.powi(k));
    }
    if base == Complex64::new(0.0, 0.0) {
        return if exp.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(EvalError::DivisionByZero)
        };
    }
    if base.im == 0.0 && exp.im == 0.0 {
        if base.re > 0.0 {
            return finite(Complex64::new(base.re.powf(exp.re), 0.0));
        }
        if mode == EvalMode::Real {
            return Err(EvalError::FractionalPowerOfNegative(base.re));
        }
    }
    finite(base.powc(exp))
}

fn apply_func(f: Func, z: Complex64, mode: EvalMode) -> Result<Complex64, EvalError> {
    let out = match f {
        Func::Sin => {
            if z.im == 0.0 {
                Complex64::new(z.re.sin(), 0.0)
            } else {
                z.sin()
            }
        }
        Func::Cos => {
            if z.im == 0.0 {
                Complex64::new(z.re.cos(), 0.0)
            } else {
                z.cos()
            }
        }
        Func::Exp => {
            if z.im == 0.0 {
                Complex64::new(z.re.exp(), 0.0)
            } else {
                z.exp()
            }
        }
        Func::Sqrt => {
            if z.im == 0.0 && z.re >= 0.0 {
                Complex64::new(z.re.sqrt(), 0.0)
            } else if is_real(z) && z.re < 0.0 && mode == EvalMode::Real {
                return Err(EvalError::SqrtOfNegative(z.re));
            } else {
                z.sqrt()
            }
        }
        Func::Abs => Complex64::new(z.norm(), 0.0),
        Func::Ln => {
            if z == Complex64::new(0.0, 0.0) {
                return Err(EvalError::LogOfNonPositive(0.0));
            }
            if z.im == 0.0 && z.re > 0.0 {
                Complex64::new(z.re.ln(), 0.0)
            } else if is_real(z) && mode == EvalMode::Real {
                return Err(EvalError::LogOfNonPositive(z.re));
            } else {
                z.ln()
            }
        }
    };
    finite(out)
}

fn compare_args(a: Complex64, b: Complex64) -> Result<(f64, f64), EvalError> {
    if !is_real(a) || !is_real(b) {
        return Err(EvalError::NonRealComparison);
    }
    Ok((a.re, b.re))
}

fn eval_node(node: &Node, t: f64, mode: EvalMode) -> Result<Complex64, EvalError> {
    match node {
        Node::Const(c) => Ok(Complex64::new(*c, 0.0)),
        Node::Pi => Ok(Complex64::new(std::f64::consts::PI, 0.0)),
        Node::Imag => Ok(Complex64::new(0.0, 1.0)),
        Node::Time => Ok(Complex64::new(t, 0.0)),
        Node::Neg(x) => Ok(-eval_node(x, t, mode)?),
        Node::Call(f, x) => apply_func(*f, eval_node(x, t, mode)?, mode),
        Node::Binary(op, l, r) => {
            let a = eval_node(l, t, mode)?;
            let b = eval_node(r, t, mode)?;
            match op {
                BinOp::Add => finite(a + b),
                BinOp::Sub => finite(a - b),
                BinOp::Mul => finite(a * b),
                BinOp::Div => {
                    if b == Complex64::new(0.0, 0.0) {
                        Err(EvalError::DivisionByZero)
                    } else {
                        finite(a / b)
                    }
                }
                BinOp::Pow => pow(a, b, mode),
                BinOp::Max => {
                    let (x, y) = compare_args(a, b)?;
                    Ok(Complex64::new(x.max(y), 0.0))
                }
                BinOp::Min => {
                    let (x, y) = compare_args(a, b)?;
                    Ok(Complex64::new(x.min(y), 0.0))
                }
            }
        }
    }
}

fn dual_node(node: &Node, t: f64) -> Result<Dual, EvalError> {
    let zero = Complex64::new(0.0, 0.0);
    let konst = |v: Complex64| Dual { value: v, deriv: zero };
    match node {
        Node::Const(c) => Ok(konst(Complex64::new(*c, 0.0))),
        Node::Pi => Ok(konst(Complex64::new(std::f64::consts::PI, 0.0))),
        Node::Imag => Ok(konst(Complex64::new(0.0, 1.0))),
        Node::Time => Ok(Dual {
            value: Complex64::new(t, 0.0),
            deriv: Complex64::new(1.0, 0.0),
        }),
        Node::Neg(x) => {
            let d = dual_node(x, t)?;
            Ok(Dual {
                value: -d.value,
                deriv: -d.deriv,
            })
        }
        Node::Call(f, x) => {
            let u = dual_node(x, t)?;
            let value = apply_func(*f, u.value, EvalMode::Complex)?;
            let slope = match f {
                Func::Sin => apply_func(Func::Cos, u.value, EvalMode::Complex)?,
                Func::Cos => -apply_func(Func::Sin, u.value, EvalMode::Complex)?,
                Func::Exp => value,
                Func::Sqrt => {
                    if value == zero {
                        if u.deriv == zero {
                            return Ok(konst(value));
                        }
                        return Err(EvalError::Kink);
                    }
                    0.5 / value
                }
                Func::Abs => {
                    if u.value == zero {
                        if u.deriv == zero {
                            return Ok(konst(value));
                        }
                        return Err(EvalError::Kink);
                    }
                    // d|z| = Re(conj(z) dz) / |z|
                    let d = (u.value.conj() * u.deriv).re / value.re;
                    return Ok(Dual {
                        value,
                        deriv: Complex64::new(d, 0.0),
                    });
                }
                Func::Ln => 1.0 / u.value,
            };
            Ok(Dual {
                value,
                deriv: finite(slope * u.deriv)?,
            })
        }
        Node::Binary(op, l, r) => {
            let a = dual_node(l, t)?;
            let b = dual_node(r, t)?;
            let (value, deriv) = match op {
                BinOp::Add => (a.value + b.value, a.deriv + b.deriv),
                BinOp::Sub => (a.value - b.value, a.deriv - b.deriv),
                BinOp::Mul => (a.value * b.value, a.deriv * b.value + a.value * b.deriv),
                BinOp::Div => {
                    if b.value == zero {
                        return Err(EvalError::DivisionByZero);
                    }
                    let q = a.value / b.value;
                    (q, (a.deriv - q * b.deriv) / b.value)
                }
                BinOp::Pow => {
                    let value = pow(a.value, b.value, EvalMode::Complex)?;
                    let deriv = if b.deriv == zero {
                        if a.deriv == zero {
                            zero
                        } else if let Some(k) = real_int(b.value) {
                            if k == 0 {
                                zero
                            } else {
                                let lower = pow(a.value, Complex64::new(f64::from(k - 1), 0.0), EvalMode::Complex)?;
                                f64::from(k) * lower * a.deriv
                            }
                        } else {
                            if a.value == zero {
                                return Err(EvalError::Kink);
                            }
                            b.value * value / a.value * a.deriv
                        }
                    } else {
                        if a.value == zero {
                            return Err(EvalError::Kink);
                        }
                        let ln_a = apply_func(Func::Ln, a.value, EvalMode::Complex)?;
                        value * (b.deriv * ln_a + b.value * a.deriv / a.value)
                    };
                    (value, deriv)
                }
                BinOp::Max | BinOp::Min => {
                    let (x, y) = compare_args(a.value, b.value)?;
                    let pick_a = if *op == BinOp::Max { x > y } else { x < y };
                    if x == y {
                        if a.deriv != b.deriv {
                            return Err(EvalError::Kink);
                        }
                        return Ok(a);
                    }
                    return Ok(if pick_a { a } else { b });
                }
            };
            Ok(Dual {
                value: finite(value)?,
                deriv: finite(deriv)?,
            })
        }
    }
}

// Printing. Precedence levels: 1 additive, 2 multiplicative, 3 unary,
// 4 power, 5 atom.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Const(c) if c.is_sign_negative() => 3,
        Node::Const(_) | Node::Pi | Node::Imag | Node::Time | Node::Call(..) => 5,
        Node::Neg(_) => 3,
        Node::Binary(op, ..) => match op {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
            BinOp::Max | BinOp::Min => 5,
        },
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    let wrap = precedence(node) < min_prec;
    if wrap {
        f.write_str("(")?;
    }
    match node {
        Node::Const(c) => write!(f, "{c:?}")?,
        Node::Pi => f.write_str("pi")?,
        Node::Imag => f.write_str("i")?,
        Node::Time => f.write_str("t")?,
        Node::Neg(x) => {
            f.write_str("-")?;
            // `-2` would re-parse as a negative literal, so keep the node.
            let inner = if matches!(**x, Node::Const(_)) { 6 } else { 3 };
            write_node(f, x, inner)?;
        }
        Node::Call(func, x) => {
            write!(f, "{}(", func.name())?;
            write_node(f, x, 0)?;
            f.write_str(")")?;
        }
        Node::Binary(op, l, r) => match op {
            BinOp::Max | BinOp::Min => {
                f.write_str(if *op == BinOp::Max { "max(" } else { "min(" })?;
                write_node(f, l, 0)?;
                f.write_str(", ")?;
                write_node(f, r, 0)?;
                f.write_str(")")?;
            }
            BinOp::Add | BinOp::Sub => {
                write_node(f, l, 1)?;
                f.write_str(if *op == BinOp::Add { " + " } else { " - " })?;
                write_node(f, r, 2)?;
            }
            BinOp::Mul | BinOp::Div => {
                write_node(f, l, 2)?;
                f.write_str(if *op == BinOp::Mul { "*" } else { "/" })?;
                write_node(f, r, 3)?;
            }
            BinOp::Pow => {
                write_node(f, l, 5)?;
                f.write_str("^")?;
                write_node(f, r, 3)?;
            }
        },
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, 0)
    }
}
