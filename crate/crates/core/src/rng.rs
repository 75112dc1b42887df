//! Counter-based normal variates.
//!
//! Variate `i` of path `j` is a pure function of `(master seed, j, i)`: word
//! `i` of the ChaCha8 stream keyed by the master seed with the path index as
//! stream id, pushed through the normal quantile function. Workers can
//! therefore simulate any subset of paths in any order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Per-path source of standard normal variates.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    path: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self {
            seed,
            path,
            counter: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    /// Index of the next variate to be drawn.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Next standard normal variate of this path.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        self.counter += 1;
        normal_quantile(unit_open(self.rng.next_u64()))
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.next_normal();
        }
    }

    /// Variate `i` of path `path` without touching any stream state.
    pub fn normal_at(seed: u64, path: u64, i: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        // One u64 per variate, i.e. two u32 words.
        rng.set_word_pos(u128::from(i) * 2);
        normal_quantile(unit_open(rng.next_u64()))
    }
}

#[inline]
fn unit_open(w: u64) -> f64 {
    // 53 random bits mapped into (0, 1).
    ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal quantile for `p` in (0, 1), Wichura's AS241 (PPND16),
/// accurate to about 1e-16 relative.
#[inline]
pub fn normal_quantile(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&CENTRAL_NUM, r) / poly(&CENTRAL_DEN, r);
    }
    tail_quantile(p, q)
}

#[inline(never)]
fn tail_quantile(p: f64, q: f64) -> f64 {
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&INNER_NUM, r) / poly(&INNER_DEN, r)
    } else {
        let r = r - 5.0;
        poly(&OUTER_NUM, r) / poly(&OUTER_DEN, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

#[inline(always)]
fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_4e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const INNER_NUM: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const INNER_DEN: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const OUTER_NUM: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const OUTER_DEN: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];
