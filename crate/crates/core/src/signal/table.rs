use std::io::{Read, Write};

use num_complex::Complex;

use super::oracle::SampleCounter;
use super::{total_points, SignalOracle};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const RLSF_MAGIC: [u8; 4] = *b"RLSF";
pub const RLSF_VERSION: u32 = 1;

/// Oracle backed by a row-major table of all `n^d` values.
#[derive(Debug, Clone)]
pub struct DenseSignal<T> {
    n: u64,
    d: usize,
    values: Vec<Complex<T>>,
    counter: SampleCounter,
}

impl<T: Scalar> DenseSignal<T> {
    pub fn new(n: u64, d: usize, values: Vec<Complex<T>>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid("n and d must be positive"));
        }
        let total = total_points(n, d).ok_or_else(|| invalid("n^d overflows"))?;
        if values.len() as u64 != total {
            return Err(invalid(format!(
                "table holds {} values, expected {total}",
                values.len()
            )));
        }
        Ok(Self {
            n,
            d,
            values,
            counter: SampleCounter::default(),
        })
    }

    /// Read every grid point of `source` once into a table.
    ///
    /// The reads go through `source.sample`, so they show up in its counter.
    pub fn materialize<O: SignalOracle<T> + ?Sized>(source: &O) -> Result<Self> {
        let (n, d) = (source.n(), source.dim());
        let total = total_points(n, d).ok_or_else(|| invalid("n^d overflows"))?;
        let mut t = vec![0u64; d];
        let mut values = Vec::with_capacity(total as usize);
        for _ in 0..total {
            values.push(source.sample(&t));
            for slot in t.iter_mut().rev() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
        Self::new(n, d, values)
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }
}

impl<T: Scalar> SignalOracle<T> for DenseSignal<T> {
    fn n(&self) -> u64 {
        self.n
    }
    fn dim(&self) -> usize {
        self.d
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        self.counter.tick();
        let n = self.n;
        let idx = if self.d == 1 {
            t[0] % n
        } else {
            t.iter().fold(0u64, |acc, &x| acc * n + x % n)
        };
        self.values[idx as usize]
    }
    fn samples(&self) -> u64 {
        self.counter.get()
    }
}

/// Write a dense dump: magic, `u32` version, `u64` n, `u32` d, then
/// little-endian `f64` (re, im) pairs in row-major order.
pub fn write_rlsf<T: Scalar, W: Write>(
    mut out: W,
    n: u64,
    d: usize,
    values: &[Complex<T>],
) -> Result<()> {
    let total = total_points(n, d).ok_or_else(|| invalid("n^d overflows"))?;
    if values.len() as u64 != total {
        return Err(invalid(format!(
            "{} values do not fill a {n}^{d} grid",
            values.len()
        )));
    }
    let d32 = u32::try_from(d).map_err(|_| invalid("dimension exceeds u32"))?;
    let mut header = Vec::with_capacity(20);
    header.extend_from_slice(&RLSF_MAGIC);
    header.extend_from_slice(&RLSF_VERSION.to_le_bytes());
    header.extend_from_slice(&n.to_le_bytes());
    header.extend_from_slice(&d32.to_le_bytes());
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(16 * values.len().min(1 << 16));
    for chunk in values.chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.re.as_f64().to_le_bytes());
            buf.extend_from_slice(&v.im.as_f64().to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a dense dump written by [`write_rlsf`].
pub fn read_rlsf<T: Scalar, R: Read>(mut input: R) -> Result<DenseSignal<T>> {
    let mut header = [0u8; 20];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if header[..4] != RLSF_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != RLSF_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let d = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(Error::Format("n and d must be positive".into()));
    }
    let total = total_points(n, d).ok_or_else(|| Error::Format("n^d overflows".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() as u64 != total.saturating_mul(16) {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            total.saturating_mul(16)
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    DenseSignal::new(n, d, values)
}
