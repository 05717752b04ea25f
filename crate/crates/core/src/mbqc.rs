//! Measurement-based computation with Z2-linear classical control.
//!
//! Bit vectors are little-endian: bit `k` of an integer index is entry `k`
//! of the vector. Resource contexts and outcomes use the Bell-scenario
//! order, where party `0` is the most significant bit.

use crate::empirical::EmpiricalModel;
use crate::error::{Error, Result};
use crate::fraction::{noncontextual_fraction, FractionOptions};
use crate::scenario::MeasurementScenario;

/// Binary matrix stored row-major as `0`/`1` bytes.
pub type BitMatrix = Vec<Vec<u8>>;

/// Largest `l (m + 1)` for which affine maps are enumerated.
pub const MAX_AFFINE_BITS: usize = 20;

fn check_matrix(name: &str, mat: &BitMatrix, rows: usize, cols: usize) -> Result<()> {
    if mat.len() != rows || mat.iter().any(|r| r.len() != cols) {
        return Err(Error::WidthMismatch(format!(
            "{name} must be {rows} x {cols}"
        )));
    }
    if mat.iter().flatten().any(|&b| b > 1) {
        return Err(Error::WidthMismatch(format!(
            "{name} has a non-binary entry"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct L2Mbqc {
    m: usize,
    l: usize,
    n: usize,
    q: BitMatrix,
    t: BitMatrix,
    z: BitMatrix,
    resource: EmpiricalModel,
}

impl L2Mbqc {
    pub fn new(
        m: usize,
        l: usize,
        q: BitMatrix,
        t: BitMatrix,
        z: BitMatrix,
        resource: EmpiricalModel,
    ) -> Result<Self> {
        let n = q.len();
        check_matrix("Q", &q, n, m)?;
        check_matrix("T", &t, n, n)?;
        check_matrix("Z", &z, l, n)?;
        for (j, row) in t.iter().enumerate() {
            if row[j..].contains(&1) {
                return Err(Error::WidthMismatch(format!(
                    "T is not strictly lower triangular in row {j}"
                )));
            }
        }
        if resource.scenario() != &MeasurementScenario::bell(n, 2, 2)? {
            return Err(Error::ResourceScenarioMismatch(n));
        }
        Ok(Self {
            m,
            l,
            n,
            q,
            t,
            z,
            resource,
        })
    }

    /// The OR gate on two bits from three GHZ parties.
    pub fn or_gadget(resource: EmpiricalModel) -> Result<Self> {
        Self::new(
            2,
            1,
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![vec![0; 3]; 3],
            vec![vec![1, 1, 1]],
            resource,
        )
    }

    pub fn input_width(&self) -> usize {
        self.m
    }

    pub fn output_width(&self) -> usize {
        self.l
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn resource(&self) -> &EmpiricalModel {
        &self.resource
    }

    /// Same classical control on another resource.
    pub fn with_resource(&self, resource: EmpiricalModel) -> Result<Self> {
        Self::new(
            self.m,
            self.l,
            self.q.clone(),
            self.t.clone(),
            self.z.clone(),
            resource,
        )
    }

    /// Exact output distribution for input `input` (little-endian index),
    /// indexed by the little-endian output integer.
    pub fn run_distribution(&self, input: usize) -> Result<Vec<f64>> {
        if input >= 1 << self.m {
            return Err(Error::WidthMismatch(format!(
                "input {input} does not fit in {} bits",
                self.m
            )));
        }
        let n = self.n;
        let i_bits: Vec<u8> = (0..self.m).map(|k| ((input >> k) & 1) as u8).collect();
        let qi: Vec<u8> = self
            .q
            .iter()
            .map(|row| row.iter().zip(&i_bits).fold(0, |acc, (a, b)| acc ^ (a & b)))
            .collect();
        let mut out = vec![0.0; 1 << self.l];
        for s in 0..1usize << n {
            let s_bits: Vec<u8> = (0..n).map(|j| ((s >> j) & 1) as u8).collect();
            let mut ctx = 0;
            let mut local = 0;
            for j in 0..n {
                let qj = self.t[j][..j]
                    .iter()
                    .zip(&s_bits)
                    .fold(qi[j], |acc, (a, b)| acc ^ (a & b));
                ctx = (ctx << 1) | qj as usize;
                local = (local << 1) | s_bits[j] as usize;
            }
            let p = self.resource.table(ctx)[local];
            if p == 0.0 {
                continue;
            }
            let o = self.z.iter().enumerate().fold(0usize, |acc, (k, row)| {
                let bit = row.iter().zip(&s_bits).fold(0, |a, (x, y)| a ^ (x & y));
                acc | ((bit as usize) << k)
            });
            out[o] += p;
        }
        Ok(out)
    }

    /// The input-output map when every run is deterministic.
    pub fn deterministic_function(&self) -> Result<Option<BooleanFunction>> {
        let mut table = Vec::with_capacity(1 << self.m);
        for i in 0..1usize << self.m {
            let dist = self.run_distribution(i)?;
            match dist.iter().position(|&p| (p - 1.0).abs() <= 1e-9) {
                Some(o) => table.push(o as u32),
                None => return Ok(None),
            }
        }
        Ok(Some(BooleanFunction::new(self.m, self.l, table)?))
    }
}

/// `f: 2^m -> 2^l` as an explicit table of little-endian output integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanFunction {
    m: usize,
    l: usize,
    table: Vec<u32>,
}

impl BooleanFunction {
    pub fn new(m: usize, l: usize, table: Vec<u32>) -> Result<Self> {
        if l > 31 || m > 24 {
            return Err(Error::SizeLimitExceeded {
                what: "function width",
                size: (m.max(l)) as u128,
                limit: 24,
            });
        }
        if table.len() != 1 << m {
            return Err(Error::WidthMismatch(format!(
                "{} table entries for {m} input bits",
                table.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= 1 << l) {
            return Err(Error::WidthMismatch(format!(
                "value {bad} does not fit in {l} output bits"
            )));
        }
        Ok(Self { m, l, table })
    }

    pub fn from_fn(m: usize, l: usize, f: impl Fn(usize) -> u32) -> Result<Self> {
        Self::new(m, l, (0..1usize << m).map(f).collect())
    }

    /// Parses a truth table written as `ceil(l/4)` hex digits per input, in
    /// increasing input order. `OR` on two bits is `"0111"`.
    pub fn from_hex(m: usize, l: usize, hex: &str) -> Result<Self> {
        let digits: Vec<char> = hex
            .trim()
            .trim_start_matches("0x")
            .chars()
            .filter(|c| *c != '_')
            .collect();
        let per = l.div_ceil(4).max(1);
        if digits.len() != per << m {
            return Err(Error::Parse(format!(
                "truth table needs {} hex digits for m = {m}, l = {l}, got {}",
                per << m,
                digits.len()
            )));
        }
        let table = digits
            .chunks(per)
            .map(|chunk| {
                let s: String = chunk.iter().collect();
                u32::from_str_radix(&s, 16)
                    .map_err(|_| Error::Parse(format!("bad hex digits `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, l, table)
    }

    pub fn to_hex(&self) -> String {
        let per = self.l.div_ceil(4).max(1);
        self.table.iter().map(|v| format!("{v:0per$x}")).collect()
    }

    pub fn input_width(&self) -> usize {
        self.m
    }

    pub fn output_width(&self) -> usize {
        self.l
    }

    pub fn eval(&self, input: usize) -> u32 {
        self.table[input]
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// True iff `f(i) xor f(0)` is linear over Z2.
    pub fn is_affine(&self) -> bool {
        let c = self.table[0];
        let n = self.table.len();
        (0..n).all(|i| {
            (0..n).all(|j| self.table[i ^ j] ^ c == (self.table[i] ^ c) ^ (self.table[j] ^ c))
        })
    }

    /// Fraction of inputs on which the two functions differ.
    pub fn distance(&self, other: &BooleanFunction) -> Result<f64> {
        if self.m != other.m || self.l != other.l {
            return Err(Error::WidthMismatch(
                "functions have different widths".into(),
            ));
        }
        let diff = self
            .table
            .iter()
            .zip(&other.table)
            .filter(|(a, b)| a != b)
            .count();
        Ok(diff as f64 / self.table.len() as f64)
    }
}

/// Distance from `f` to the nearest map `i -> A i xor c` (or `A i` when
/// `homogeneous` is set), by brute force over all such maps.
pub fn nu_tilde(f: &BooleanFunction, homogeneous: bool) -> Result<f64> {
    let (m, l) = (f.m, f.l);
    let bits = l * (m + 1);
    if bits > MAX_AFFINE_BITS {
        return Err(Error::SizeLimitExceeded {
            what: "affine maps (2^(l(m+1)))",
            size: 1u128 << bits.min(127),
            limit: 1 << MAX_AFFINE_BITS,
        });
    }
    let consts: u32 = if homogeneous { 1 } else { 1 << l };
    let mut best = usize::MAX;
    // Column k of A is the image of the k-th unit vector.
    for cols in 0..1usize << (l * m) {
        let col = |k: usize| ((cols >> (k * l)) & ((1 << l) - 1)) as u32;
        let linear: Vec<u32> = (0..1usize << m)
            .map(|i| {
                (0..m)
                    .filter(|k| (i >> k) & 1 == 1)
                    .fold(0, |acc, k| acc ^ col(k))
            })
            .collect();
        for c in 0..consts {
            let diff = linear
                .iter()
                .zip(&f.table)
                .filter(|(h, v)| (*h ^ c) != **v)
                .count();
            best = best.min(diff);
            if best == 0 {
                return Ok(0.0);
            }
        }
    }
    Ok(best as f64 / (1usize << m) as f64)
}

/// `2^-m sum_i P(f(i) | i)`.
pub fn average_success(k: &L2Mbqc, f: &BooleanFunction) -> Result<f64> {
    if k.m != f.m || k.l != f.l {
        return Err(Error::WidthMismatch(format!(
            "computation is {} -> {} bits, function is {} -> {}",
            k.m, k.l, f.m, f.l
        )));
    }
    let mut total = 0.0;
    for i in 0..1usize << k.m {
        total += k.run_distribution(i)?[f.eval(i) as usize];
    }
    Ok(total / (1usize << k.m) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbqcBoundReport {
    pub success: f64,
    pub failure: f64,
    pub ncf: f64,
    pub nu_tilde: f64,
    /// `failure - ncf * nu_tilde`; nonnegative when the bound holds.
    pub slack: f64,
    pub holds: bool,
}

/// Compares the average failure probability with `NCF(resource) * nu(f)`.
pub fn check_failure_bound(
    k: &L2Mbqc,
    f: &BooleanFunction,
    opts: &FractionOptions,
    homogeneous: bool,
) -> Result<MbqcBoundReport> {
    let success = average_success(k, f)?;
    let nu = nu_tilde(f, homogeneous)?;
    let ncf = noncontextual_fraction(&k.resource, opts)?.ncf;
    let failure = 1.0 - success;
    let slack = failure - ncf * nu;
    Ok(MbqcBoundReport {
        success,
        failure,
        ncf,
        nu_tilde: nu,
        slack,
        holds: slack >= -1e-6,
    })
}
