//! Scalar reverse-mode tape.
//!
//! Every operation appends one record holding its operands and output
//! value. [`Tape::backward`] walks the records once in reverse order and
//! accumulates adjoints. Protected operators use the derivative of their
//! protected form.

use crate::dst::Algebra;
use crate::expr::eval::protected_denominator;
use crate::expr::{EXP_CLAMP, PROTECT_EPS};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Sin(u32),
    Cos(u32),
    Exp(u32),
    ExpRaw(u32),
    Log(u32),
    Sigmoid(u32),
    Sqrt(u32),
    Offset(u32),
    Scale(u32, f64),
    /// operands live in `args[start..start + len]`
    Sum { start: u32, len: u32 },
    /// weights in `args[start..start+len]`, values in `args[start+len..start+2len]`
    Dot { start: u32, len: u32 },
    /// weights in `args[start..start+len]`, constants in `consts[cstart..cstart+len]`
    DotConst { start: u32, cstart: u32, len: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Record {
    op: Op,
    value: f64,
}

/// Ordered record of scalar operations.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    records: Vec<Record>,
    args: Vec<u32>,
    consts: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all records, keeping allocations.
    pub fn clear(&mut self) {
        self.records.clear();
        self.args.clear();
        self.consts.clear();
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, op: Op, value: f64) -> Var {
        let idx = u32::try_from(self.records.len()).expect("tape exceeds u32 records");
        self.records.push(Record { op, value });
        Var(idx)
    }

    /// Records an independent input (a parameter or a constant).
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, v: Var) -> f64 {
        self.records[v.index()].value
    }

    /// Reverse sweep seeded with `seed` at `output`; returns the adjoint of
    /// every record.
    pub fn backward(&self, output: Var, seed: f64) -> Vec<f64> {
        let mut adj = vec![0.0f64; self.records.len()];
        adj[output.index()] = seed;
        for i in (0..=output.index()).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let rec = self.records[i];
            let val = |k: u32| self.records[k as usize].value;
            match rec.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] += g;
                }
                Op::Sub(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] -= g;
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(a), val(b));
                    adj[a as usize] += g * vb;
                    adj[b as usize] += g * va;
                }
                Op::Div(a, b) => {
                    let vb = val(b);
                    let den = protected_denominator(vb);
                    adj[a as usize] += g / den;
                    // the substituted denominator is constant inside the zone
                    if vb.abs() >= PROTECT_EPS {
                        adj[b as usize] -= g * rec.value / den;
                    }
                }
                Op::Sin(a) => adj[a as usize] += g * val(a).cos(),
                Op::Cos(a) => adj[a as usize] -= g * val(a).sin(),
                Op::Exp(a) => {
                    if val(a) < EXP_CLAMP {
                        adj[a as usize] += g * rec.value;
                    }
                }
                Op::ExpRaw(a) => adj[a as usize] += g * rec.value,
                Op::Log(a) => {
                    let x = val(a);
                    let sign = if x < 0.0 { -1.0 } else { 1.0 };
                    adj[a as usize] += g * sign / (x.abs() + PROTECT_EPS);
                }
                Op::Sigmoid(a) => adj[a as usize] += g * rec.value * (1.0 - rec.value),
                Op::Sqrt(a) => {
                    if rec.value > 0.0 {
                        adj[a as usize] += g / (2.0 * rec.value);
                    }
                }
                Op::Offset(a) => adj[a as usize] += g,
                Op::Scale(a, c) => adj[a as usize] += g * c,
                Op::Sum { start, len } => {
                    for k in start..start + len {
                        adj[self.args[k as usize] as usize] += g;
                    }
                }
                Op::Dot { start, len } => {
                    let (s, n) = (start as usize, len as usize);
                    for k in 0..n {
                        let w = self.args[s + k] as usize;
                        let o = self.args[s + n + k] as usize;
                        let (vw, vo) = (self.records[w].value, self.records[o].value);
                        adj[w] += g * vo;
                        adj[o] += g * vw;
                    }
                }
                Op::DotConst { start, cstart, len } => {
                    let (s, cs, n) = (start as usize, cstart as usize, len as usize);
                    for k in 0..n {
                        adj[self.args[s + k] as usize] += g * self.consts[cs + k];
                    }
                }
            }
        }
        adj
    }
}

impl Algebra for Tape {
    type V = Var;

    fn lit(&mut self, x: f64) -> Var {
        self.leaf(x)
    }
    fn val(&self, v: Var) -> f64 {
        self.value(v)
    }
    fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a.0, b.0), v)
    }
    fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a.0, b.0), v)
    }
    fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a.0, b.0), v)
    }
    fn div(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) / protected_denominator(self.value(b));
        self.push(Op::Div(a.0, b.0), v)
    }
    fn sin(&mut self, a: Var) -> Var {
        let v = self.value(a).sin();
        self.push(Op::Sin(a.0), v)
    }
    fn cos(&mut self, a: Var) -> Var {
        let v = self.value(a).cos();
        self.push(Op::Cos(a.0), v)
    }
    fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).min(EXP_CLAMP).exp();
        self.push(Op::Exp(a.0), v)
    }
    fn log(&mut self, a: Var) -> Var {
        let v = (self.value(a).abs() + PROTECT_EPS).ln();
        self.push(Op::Log(a.0), v)
    }
    fn exp_raw(&mut self, a: Var) -> Var {
        let v = self.value(a).exp();
        self.push(Op::ExpRaw(a.0), v)
    }
    fn sigmoid(&mut self, a: Var) -> Var {
        let v = crate::dst::sigmoid(self.value(a));
        self.push(Op::Sigmoid(a.0), v)
    }
    fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).sqrt();
        self.push(Op::Sqrt(a.0), v)
    }
    fn offset(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) + c;
        self.push(Op::Offset(a.0), v)
    }
    fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(Op::Scale(a.0, c), v)
    }
    fn sum(&mut self, xs: &[Var]) -> Var {
        let start = self.args.len() as u32;
        let v = xs.iter().map(|&x| self.value(x)).sum();
        self.args.extend(xs.iter().map(|x| x.0));
        self.push(
            Op::Sum {
                start,
                len: xs.len() as u32,
            },
            v,
        )
    }
    fn dot(&mut self, ws: &[Var], os: &[Var]) -> Var {
        debug_assert_eq!(ws.len(), os.len());
        let start = self.args.len() as u32;
        let v = ws
            .iter()
            .zip(os)
            .map(|(&w, &o)| self.value(w) * self.value(o))
            .sum();
        self.args.extend(ws.iter().map(|x| x.0));
        self.args.extend(os.iter().map(|x| x.0));
        self.push(
            Op::Dot {
                start,
                len: ws.len() as u32,
            },
            v,
        )
    }
    fn dot_const(&mut self, ws: &[Var], cs: &[f64]) -> Var {
        debug_assert_eq!(ws.len(), cs.len());
        let start = self.args.len() as u32;
        let cstart = self.consts.len() as u32;
        let v = ws.iter().zip(cs).map(|(&w, &c)| self.value(w) * c).sum();
        self.args.extend(ws.iter().map(|x| x.0));
        self.consts.extend_from_slice(cs);
        self.push(
            Op::DotConst {
                start,
                cstart,
                len: ws.len() as u32,
            },
            v,
        )
    }
}
