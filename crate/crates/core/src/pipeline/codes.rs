use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exactnum::{bin_range, ceil_log2, len, pack_blocks, BigNat};

/// Per-bucket code integers: `u_j` packs point floors, `w_j` packs labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CraftedCode {
    /// Number of buckets actually used.
    pub bucket_count: usize,
    /// Blocks per bucket.
    pub bucket_size: usize,
    pub rho: u64,
    pub c: u64,
    pub u: Vec<BigNat>,
    pub w: Vec<BigNat>,
    /// Filler floors used in the last bucket.
    pub sentinels: Vec<BigNat>,
    /// `[⌊first z⌋, ⌊last z⌋ + 1]` for every bucket.
    pub intervals: Vec<(BigNat, BigNat)>,
}

/// `m = ⌈√(N·max(1, ⌈log2 N⌉))⌉`.
pub fn default_bucket_count(n: usize) -> usize {
    let lg = ceil_log2(n as u64).max(1) as usize;
    let target = n * lg;
    let mut m = (target as f64).sqrt() as usize;
    while m * m < target {
        m += 1;
    }
    while m > 1 && (m - 1) * (m - 1) >= target {
        m -= 1;
    }
    m.clamp(1, n.max(1))
}

pub fn floor_nat(z: &BigRational) -> Result<BigNat> {
    let f: BigInt = z.floor().to_integer();
    if f.is_negative() {
        return Err(Error::Parameter(format!("negative projected value {z}")));
    }
    Ok(f.to_biguint().expect("nonnegative"))
}

/// Crafts codes for `z` (strictly increasing, gaps ≥ 2) with `m` requested buckets.
///
/// `global_max_floor` anchors the sentinels; pass the largest floor over the
/// whole dataset when several code sets share one projection.
pub fn craft_codes(
    z: &[BigRational],
    labels: &[u64],
    classes: u64,
    m: usize,
    global_max_floor: &BigNat,
) -> Result<CraftedCode> {
    let n = z.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Parameter("codes need matching nonempty z and labels".into()));
    }
    if m == 0 || m > n {
        return Err(Error::Parameter(format!("bucket count {m} not in 1..={n}")));
    }
    let two = BigRational::from_integer(2.into());
    if z.windows(2).any(|w| &w[1] - &w[0] < two) {
        return Err(Error::Parameter("projected values must increase with gaps of at least 2".into()));
    }
    let floors = z.iter().map(floor_nat).collect::<Result<Vec<_>>>()?;
    let k = n.div_ceil(m);
    let buckets = n.div_ceil(k);
    let fill = buckets * k - n;
    let sentinels: Vec<BigNat> = (1..=fill as u64).map(|t| global_max_floor + 2u64 * t).collect();
    let top = sentinels.last().unwrap_or(global_max_floor).max(floors.last().expect("nonempty"));
    let rho = len(top).max(1);
    let c = len(&BigNat::from(classes)).max(1);
    let mut u = Vec::with_capacity(buckets);
    let mut w = Vec::with_capacity(buckets);
    let mut intervals = Vec::with_capacity(buckets);
    for j in 0..buckets {
        let lo = j * k;
        let hi = ((j + 1) * k).min(n);
        let mut ublocks: Vec<BigNat> = floors[lo..hi].to_vec();
        let mut wblocks: Vec<BigNat> = labels[lo..hi].iter().map(|&y| BigNat::from(y)).collect();
        if hi - lo < k {
            ublocks.extend(sentinels.iter().cloned());
            wblocks.resize(k, BigNat::from(0u8));
        }
        u.push(pack_blocks(&ublocks, rho)?);
        w.push(pack_blocks(&wblocks, c)?);
        intervals.push((floors[lo].clone(), &floors[hi - 1] + 1u8));
    }
    Ok(CraftedCode {
        bucket_count: buckets,
        bucket_size: k,
        rho,
        c,
        u,
        w,
        sentinels,
        intervals,
    })
}

impl CraftedCode {
    pub fn u_block(&self, j: usize, t: usize) -> BigNat {
        let r = self.rho;
        bin_range(&self.u[j], t as u64 * r + 1, (t as u64 + 1) * r, self.bucket_size as u64 * r)
            .expect("block inside code")
    }

    pub fn w_block(&self, j: usize, t: usize) -> BigNat {
        let c = self.c;
        bin_range(&self.w[j], t as u64 * c + 1, (t as u64 + 1) * c, self.bucket_size as u64 * c)
            .expect("block inside code")
    }

    /// Checks the pairwise floor gap inside every `u_j`.
    pub fn check_gaps(&self) -> Result<()> {
        for j in 0..self.bucket_count {
            let blocks: Vec<BigNat> = (0..self.bucket_size).map(|t| self.u_block(j, t)).collect();
            for a in 0..blocks.len() {
                for b in (a + 1)..blocks.len() {
                    let (x, y) = (&blocks[a], &blocks[b]);
                    let d = if x > y { x - y } else { y - x };
                    if d.to_u64().is_some_and(|d| d < 2) {
                        return Err(Error::Parameter(format!(
                            "bucket {j}: blocks {a} and {b} are closer than 2"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn two_points_one_bucket() {
        let z = [r(42, 10), r(97, 10)];
        let code = craft_codes(&z, &[3, 1], 3, 1, &BigNat::from(9u8)).unwrap();
        assert_eq!((code.rho, code.c), (4, 2));
        assert_eq!(code.u, vec![BigNat::from(73u8)]);
        assert_eq!(code.w, vec![BigNat::from(13u8)]);
    }

    #[test]
    fn partial_bucket_gets_a_sentinel() {
        let z = [r(1, 1), r(3, 1), r(5, 1)];
        let code = craft_codes(&z, &[1, 2, 1], 2, 2, &BigNat::from(5u8)).unwrap();
        assert_eq!((code.bucket_count, code.bucket_size), (2, 2));
        assert_eq!(code.sentinels, vec![BigNat::from(7u8)]);
        assert_eq!(code.u_block(1, 0), BigNat::from(5u8));
        assert_eq!(code.u_block(1, 1), BigNat::from(7u8));
        assert_eq!(code.w_block(1, 1), BigNat::from(0u8));
        code.check_gaps().unwrap();
    }

    #[test]
    fn single_point() {
        let code = craft_codes(&[r(6, 1)], &[2], 2, 1, &BigNat::from(6u8)).unwrap();
        assert_eq!(code.u, vec![BigNat::from(6u8)]);
        assert_eq!(code.w, vec![BigNat::from(2u8)]);
    }

    #[test]
    fn bucket_counts() {
        assert_eq!(default_bucket_count(1), 1);
        assert_eq!(default_bucket_count(16), 8);
        assert_eq!(default_bucket_count(64), 20);
        assert_eq!(default_bucket_count(256), 46);
    }

    #[test]
    fn rejects_close_values() {
        assert!(craft_codes(&[r(1, 1), r(2, 1)], &[1, 1], 1, 1, &BigNat::from(2u8)).is_err());
    }
}
