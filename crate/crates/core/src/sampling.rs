//! Seeded random streams and partitionwise maps.

use crate::error::{Error, Result};
use crate::model::{Edge, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

/// One recorded draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draw {
    pub path: String,
    pub index: u64,
    pub value: u64,
}

/// A deterministic random stream named by `(seed, path)`.
///
/// Children are derived from the name only, so the draws of a child never
/// depend on how much the parent has consumed.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    path: String,
    rng: ChaCha8Rng,
    draws: u64,
    transcript: Option<Vec<Draw>>,
}

fn stream_key(seed: u64, path: &str) -> u64 {
    // FNV-1a over the seed and path, then a splitmix finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(path.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, String::new())
    }

    fn at(seed: u64, path: String) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(stream_key(seed, &path));
        RngStream { seed, path, rng, draws: 0, transcript: None }
    }

    /// Substream `path/label`, starting fresh and with its own transcript
    /// setting inherited.
    pub fn child(&self, label: impl AsRef<str>) -> Self {
        let path = if self.path.is_empty() {
            label.as_ref().to_string()
        } else {
            format!("{}/{}", self.path, label.as_ref())
        };
        let mut s = Self::at(self.seed, path);
        if self.transcript.is_some() {
            s.transcript = Some(Vec::new());
        }
        s
    }

    pub fn recording(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn draw_count(&self) -> u64 {
        self.draws
    }

    pub fn transcript(&self) -> &[Draw] {
        self.transcript.as_deref().unwrap_or(&[])
    }

    fn record(&mut self, value: u64) {
        if let Some(t) = &mut self.transcript {
            t.push(Draw { path: self.path.clone(), index: self.draws, value });
        }
        self.draws += 1;
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let v = self.rng.gen_range(0..n);
        self.record(v);
        v
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        let v: f64 = self.rng.gen();
        self.record(v.to_bits());
        v
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Index drawn with the given nonnegative weights.
    pub fn weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = self.unit() * total;
        for (i, &w) in weights.iter().enumerate() {
            if x < w {
                return i;
            }
            x -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// `m` distinct values from `0..n` in draw order.
    pub fn sample_distinct(&mut self, n: usize, m: usize) -> Vec<u32> {
        assert!(m <= n);
        let mut pool: Vec<u32> = (0..n as u32).collect();
        for i in 0..m {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    }
}

/// Render a transcript as `path draw-index value` lines.
pub fn render_transcript(draws: &[Draw]) -> String {
    let mut out = String::new();
    for d in draws {
        let path = if d.path.is_empty() { "-" } else { &d.path };
        writeln!(out, "{path} {} {}", d.index, d.value).unwrap();
    }
    out
}

/// Per part, a list of image vertices (repetition allowed).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionwiseMap {
    images: Vec<Vec<u32>>,
}

/// `(phi_1, ..., phi_{k-1})` with `phi_s` used for regularization at arity `s`.
pub type MapVector = Vec<PartitionwiseMap>;

impl PartitionwiseMap {
    pub fn new(params: &Params, images: Vec<Vec<u32>>) -> Result<Self> {
        if images.len() != params.r {
            return Err(Error::InvalidDomain(format!("need {} parts, got {}", params.r, images.len())));
        }
        for (p, img) in images.iter().enumerate() {
            if let Some(&v) = img.iter().find(|&&v| v as usize >= params.part_sizes[p]) {
                return Err(Error::InvalidVertex { part: p, vertex: v });
            }
        }
        Ok(PartitionwiseMap { images })
    }

    pub(crate) fn unchecked(images: Vec<Vec<u32>>) -> Self {
        PartitionwiseMap { images }
    }

    /// The map sending domain vertex `j` of part `i` to vertex `j`.
    pub fn identity(params: &Params) -> Self {
        PartitionwiseMap {
            images: params.part_sizes.iter().map(|&n| (0..n as u32).collect()).collect(),
        }
    }

    pub fn images(&self) -> &[Vec<u32>] {
        &self.images
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.images.iter().map(|v| v.len()).collect()
    }

    /// Sorted distinct image vertices of each part.
    pub fn image_sets(&self) -> Vec<Vec<u32>> {
        self.images
            .iter()
            .map(|img| {
                let mut s = img.clone();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect()
    }

    pub fn apply(&self, e: &Edge) -> Result<Edge> {
        let mut verts = Vec::with_capacity(e.verts.len());
        for (p, &v) in e.index.members().zip(&e.verts) {
            let img = self
                .images
                .get(p)
                .and_then(|img| img.get(v as usize))
                .ok_or_else(|| Error::InvalidDomain(format!("vertex {v} of part {p}")))?;
            verts.push(*img);
        }
        Ok(Edge { index: e.index, verts })
    }

    /// One `part images...` line per part.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (p, img) in self.images.iter().enumerate() {
            let vs: Vec<String> = img.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{p} {}", vs.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(params: &Params, text: &str) -> Result<Self> {
        let mut images = vec![Vec::new(); params.r];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let p: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .filter(|&p| p < params.r)
                .ok_or_else(|| Error::parse(i + 1, "expected part label"))?;
            for t in toks {
                images[p].push(t.parse().map_err(|_| Error::parse(i + 1, format!("bad vertex {t:?}")))?);
            }
        }
        Self::new(params, images)
    }
}

/// Each of the `m[i]` images of part `i` drawn independently and uniformly.
pub fn random_map(params: &Params, m: &[usize], rng: &mut RngStream) -> PartitionwiseMap {
    assert_eq!(m.len(), params.r, "one domain size per part");
    let images = m
        .iter()
        .zip(&params.part_sizes)
        .map(|(&mi, &n)| (0..mi).map(|_| rng.below(n as u64) as u32).collect())
        .collect();
    PartitionwiseMap { images }
}

/// Same domain size `m` in every part.
pub fn random_map_uniform(params: &Params, m: usize, rng: &mut RngStream) -> PartitionwiseMap {
    random_map(params, &vec![m; params.r], rng)
}

pub fn apply_map(phi: &PartitionwiseMap, e: &Edge) -> Result<Edge> {
    phi.apply(e)
}

/// Number of maps in `Phi(h)`: `prod_i n_i^h`, `None` on overflow.
pub fn map_count(part_sizes: &[usize], h: usize) -> Option<u128> {
    part_sizes.iter().try_fold(1u128, |acc, &n| {
        (0..h).try_fold(acc, |a, _| a.checked_mul(n as u128))
    })
}

/// Decode map number `idx` of `Phi(h)` into flat images, part-major with the
/// last image varying fastest.
pub fn decode_map(part_sizes: &[usize], h: usize, mut idx: u128, out: &mut [u32]) {
    for slot in (0..part_sizes.len() * h).rev() {
        let n = part_sizes[slot / h] as u128;
        out[slot] = (idx % n) as u32;
        idx /= n;
    }
}

/// Call `f` with the flat images of every map in `Phi(h)` in canonical order.
pub fn for_each_map(part_sizes: &[usize], h: usize, mut f: impl FnMut(&[u32])) {
    let dims: Vec<usize> = part_sizes.iter().flat_map(|&n| std::iter::repeat(n).take(h)).collect();
    crate::model::for_each_tuple(&dims, |t| f(t));
}
