//! Globally adaptive 21-point Gauss–Kronrod quadrature for vector-valued
//! integrands.
//!
//! Intervals are kept in a max-heap keyed by their error estimate; the worst
//! one is bisected until the summed estimate meets the tolerance. The local
//! error estimate uses the QUADPACK rescaling of `|K21 − G10|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_634_311,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// weights of the embedded 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule: stop once the error estimate is below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0, max_intervals: 4000 }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    /// Largest per-component error estimate.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    roundoff: [f64; N],
}

impl<const N: usize> Segment<N> {
    fn key(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<const N: usize> Eq for Segment<N> {}

impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().total_cmp(&other.key())
    }
}

fn kronrod<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Segment<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = [0.0; N];
    let mut kron = [0.0; N];
    let mut res_abs = [0.0; N];
    let mut samples = [[0.0; N]; 21];
    samples[10] = fc;
    for c in 0..N {
        kron[c] = WGK[10] * fc[c];
        res_abs[c] = (WGK[10] * fc[c]).abs();
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[20 - j] = f2;
        for c in 0..N {
            kron[c] += WGK[j] * (f1[c] + f2[c]);
            res_abs[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    let mut roundoff = [0.0; N];
    for c in 0..N {
        let mean = 0.5 * kron[c];
        let mut res_asc = WGK[10] * (fc[c] - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((samples[j][c] - mean).abs() + (samples[20 - j][c] - mean).abs());
        }
        res_asc *= half.abs();
        let mut err = ((kron[c] - gauss[c]) * half).abs();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        let round = 50.0 * f64::EPSILON * res_abs[c] * half.abs();
        value[c] = kron[c] * half;
        error[c] = err.max(round);
        roundoff[c] = round;
    }
    Segment { a, b, value, error, roundoff }
}

/// Integrate a vector-valued `f` over `[a, b]`.
pub fn integrate_vec<const N: usize, F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    if a == b {
        return Ok(Integral { value: [0.0; N], error: 0.0, evaluations: 0 });
    }
    let first = kronrod(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        let mut floor = [0.0; N];
        for seg in heap.iter() {
            for c in 0..N {
                total[c] += seg.value[c];
                err[c] += seg.error[c];
                floor[c] += seg.roundoff[c];
            }
        }
        let satisfied = (0..N).all(|c| err[c] <= tol.abs.max(tol.rel * total[c].abs()).max(floor[c]));
        let worst = err.iter().cloned().fold(0.0, f64::max);
        if satisfied {
            return Ok(Integral { value: total, error: worst, evaluations });
        }
        if heap.len() >= tol.max_intervals {
            let estimate = total.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
            return Err(Error::Quadrature { estimate, error: worst });
        }
        let seg = heap.pop().expect("heap never empty");
        let at_floor = (0..N).all(|c| seg.error[c] <= 2.0 * seg.roundoff[c]);
        if at_floor {
            // the worst interval is already at rounding level
            heap.push(seg);
            return Ok(Integral { value: total, error: worst, evaluations });
        }
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine resolution: keep its estimate as final
            let mut exhausted = seg;
            exhausted.error = exhausted.roundoff;
            heap.push(exhausted);
            continue;
        }
        heap.push(kronrod(&mut f, seg.a, mid));
        heap.push(kronrod(&mut f, mid, seg.b));
        evaluations += 42;
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x| [f(x)], a, b, tol)?;
    Ok((r.value[0], r.error))
}
