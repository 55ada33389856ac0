use crate::error::Result;
use crate::exactnum::Dyadic;
use crate::gadgets::{Post, Pre, Tapped, Track};
use crate::netir::{LayeredNet, Lin, NetBuilder, Plan};

/// One code word being read block by block: its triangle track and the
/// block value accumulated so far.
struct Lane {
    track: Track,
    /// Total bits of the code word.
    total: u64,
    /// Bits per block.
    block: u64,
    acc: Option<Lin>,
}

enum Phase {
    Pre(Pre),
    Post(Post),
    Tapped(Tapped),
    Idle(Post),
}

impl Lane {
    fn new(code: Lin, total: u64, block: u64) -> Lane {
        let scale = Dyadic::pow2(-(total as i64));
        let base = code.scaled(&scale);
        Lane {
            track: Track {
                mid: base.offset(&Dyadic::pow2(-(total as i64) - 1)),
                quarter: base.offset(&Dyadic::pow2(-(total as i64) - 2)),
            },
            total,
            block,
            acc: None,
        }
    }

    fn carry(&mut self, p: &mut Plan) -> (Post, Option<usize>) {
        let acc = self.acc.take().map(|l| p.pass(l));
        (self.track.push_idle(p), acc)
    }

    fn after_carry(&mut self, h: &[Lin], (s, acc): (Post, Option<usize>)) {
        self.track = Track::after_idle(h, s);
        self.acc = acc.map(|a| h[a].clone());
    }

    /// Three layers reading bit `step` of block `t`, or carrying the lane when the block is done.
    fn begin(&mut self, step: u64, p: &mut Plan) -> (Phase, Option<usize>) {
        let acc = self.acc.take().map(|l| p.pass(l));
        let ph = if step < self.block {
            Phase::Pre(self.track.push_pre(p))
        } else {
            Phase::Idle(self.track.push_idle(p))
        };
        (ph, acc)
    }

    fn mid(&mut self, h: &[Lin], (ph, acc): (Phase, Option<usize>), p: &mut Plan) -> (Phase, Option<usize>) {
        let acc = acc.map(|a| p.pass(h[a].clone()));
        let ph = match ph {
            Phase::Pre(pre) => Phase::Post(pre.push_phi(h, p)),
            Phase::Post(post) => Phase::Tapped(post.push_tap(h, p)),
            Phase::Idle(s) => Phase::Idle(Track::after_idle(h, s).push_idle(p)),
            Phase::Tapped(_) => unreachable!("tap is the last phase"),
        };
        (ph, acc)
    }

    fn end(&mut self, h: &[Lin], (ph, acc): (Phase, Option<usize>), block_index: u64, step: u64) {
        let acc = acc.map(|a| h[a].clone());
        match ph {
            Phase::Tapped(t) => {
                let (track, tap) = t.finish(h);
                self.track = track;
                let g = block_index * self.block + step + 1;
                // 2^(total+2−g) turns the tap into the bit, 2^(block−1−step) places it
                let e = self.total as i64 + 2 - g as i64 + (self.block - 1 - step) as i64;
                let term = tap.scaled(&Dyadic::pow2(e));
                self.acc = Some(match acc {
                    Some(a) => &a + &term,
                    None => term,
                });
            }
            Phase::Idle(s) => {
                self.track = Track::after_idle(h, s);
                self.acc = acc;
            }
            _ => unreachable!("step ends after the tap"),
        }
    }
}

fn pass_opt(p: &mut Plan, l: &Option<Lin>) -> Option<usize> {
    l.as_ref().map(|l| p.pass(l.clone()))
}

fn take_opt(h: &[Lin], s: Option<usize>) -> Option<Lin> {
    s.map(|s| h[s].clone())
}

/// Block lookup on `(x, w, u)`: reads the `n` blocks of `u` (width `rho`)
/// and `w` (width `c`) in lockstep, and outputs the `w` block whose `u`
/// block equals `⌊x⌋`; `0` when `x` is more than a half unit outside every
/// `[block, block + 1]`.
///
/// Width at most 12. Each block takes `3·max(rho, c)` reading layers and three gate layers.
/// With `forward_x` the output is `(x, y)` instead of `y`.
pub fn build_stage3(n: usize, rho: u64, c: u64, forward_x: bool) -> Result<LayeredNet> {
    let mut nb = NetBuilder::new(3);
    let mut x = nb.input(0);
    let mut lu = Lane::new(nb.input(2), n as u64 * rho, rho);
    let mut lw = Lane::new(nb.input(1), n as u64 * c, c);
    let mut y: Option<Lin> = None;
    let steps = rho.max(c);
    let k = Dyadic::from_int;
    for t in 0..n as u64 {
        for s in 0..steps {
            let mut p = Plan::new();
            let a = lu.begin(s, &mut p);
            let b = lw.begin(s, &mut p);
            let xs = p.pass(x.clone());
            let ys = pass_opt(&mut p, &y);
            let h = nb.layer(p)?;

            let mut p = Plan::new();
            let a = lu.mid(&h, a, &mut p);
            let b = lw.mid(&h, b, &mut p);
            let xs = p.pass(h[xs].clone());
            let ys = ys.map(|s| p.pass(h[s].clone()));
            let h = nb.layer(p)?;

            let mut p = Plan::new();
            let a = lu.mid(&h, a, &mut p);
            let b = lw.mid(&h, b, &mut p);
            let xs = p.pass(h[xs].clone());
            let ys = ys.map(|s| p.pass(h[s].clone()));
            let h = nb.layer(p)?;

            lu.end(&h, a, t, s);
            lw.end(&h, b, t, s);
            x = h[xs].clone();
            y = take_opt(&h, ys);
        }

        let bu = lu.acc.take().expect("u block read");
        let bw = lw.acc.take().expect("w block read");
        let last = t + 1 == n as u64;

        let mut p = Plan::new();
        let s1 = p.relu(&bu.scaled(&k(2)) - &x.scaled(&k(2)));
        let s2 = p.relu((&x.scaled(&k(2)) - &bu.scaled(&k(2))).offset(&k(-2)));
        let xs = p.pass(x.clone());
        let ys = pass_opt(&mut p, &y);
        let ws = p.pass(bw);
        let carried = (!last).then(|| (lu.carry(&mut p), lw.carry(&mut p)));
        let h = nb.layer(p)?;
        if let Some((a, b)) = carried {
            lu.after_carry(&h, a);
            lw.after_carry(&h, b);
        }

        let one = Lin::constant(Dyadic::one());
        let mut p = Plan::new();
        let g1 = p.relu(&one - &h[s1]);
        let g2 = p.relu(&one - &h[s2]);
        let xs = p.pass(h[xs].clone());
        let ys = ys.map(|s| p.pass(h[s].clone()));
        let ws = p.pass(h[ws].clone());
        let carried = (!last).then(|| (lu.carry(&mut p), lw.carry(&mut p)));
        let h = nb.layer(p)?;
        if let Some((a, b)) = carried {
            lu.after_carry(&h, a);
            lw.after_carry(&h, b);
        }

        // gate·bw without a product: σ(2^(c+1)·(gate − 1) + bw), since bw < 2^c
        let hi = Dyadic::pow2(c as i64 + 1);
        let mut p = Plan::new();
        let sel = (&h[g1] + &h[g2]).scaled(&hi).offset(&-Dyadic::pow2(c as i64 + 2));
        let out = p.relu(&sel + &h[ws]);
        let xs = p.pass(h[xs].clone());
        let ys = ys.map(|s| p.pass(h[s].clone()));
        let carried = (!last).then(|| (lu.carry(&mut p), lw.carry(&mut p)));
        let h = nb.layer(p)?;
        if let Some((a, b)) = carried {
            lu.after_carry(&h, a);
            lw.after_carry(&h, b);
        }
        x = h[xs].clone();
        y = Some(match take_opt(&h, ys) {
            Some(prev) => &prev + &h[out],
            None => h[out].clone(),
        });
    }
    let y = y.expect("at least one block");
    let outputs = if forward_x { vec![x, y] } else { vec![y] };
    nb.finish(&outputs, "block_lookup")
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    fn run(net: &LayeredNet, x: BigRational, w: i64, u: i64) -> BigRational {
        net.eval_checked(&[x, r(w, 1), r(u, 1)]).unwrap().pop().unwrap()
    }

    #[test]
    fn looks_up_matching_block() {
        let net = build_stage3(2, 4, 2, false).unwrap();
        assert_eq!(run(&net, r(9, 2), 13, 73), r(3, 1));
        assert_eq!(run(&net, r(91, 10), 13, 73), r(1, 1));
        assert_eq!(run(&net, r(20, 1), 13, 73), r(0, 1));
    }

    #[test]
    fn metrics() {
        for (n, rho, c) in [(2, 4, 2), (3, 2, 5), (1, 3, 3)] {
            let m = build_stage3(n, rho, c, false).unwrap().metrics();
            assert_eq!(m.width, if n > 1 { 12 } else { 11 }, "{n} {rho} {c}");
            assert_eq!(m.depth as u64, n as u64 * (3 * rho.max(c) + 3) + 1);
        }
    }

    #[test]
    fn forwarding_keeps_x() {
        let net = build_stage3(2, 4, 2, true).unwrap();
        let out = net.eval_checked(&[r(9, 2), r(13, 1), r(73, 1)]).unwrap();
        assert_eq!(out, vec![r(9, 2), r(3, 1)]);
    }

    #[test]
    fn label_wider_than_floor() {
        // floors 1 and 3 in 2-bit blocks, labels 9 and 5 in 4-bit blocks
        let net = build_stage3(2, 2, 4, false).unwrap();
        let u = 0b01_11;
        let w = 0b1001_0101;
        assert_eq!(run(&net, r(3, 2), w, u), r(9, 1));
        assert_eq!(run(&net, r(7, 2), w, u), r(5, 1));
        assert_eq!(run(&net, r(6, 1), w, u), r(0, 1));
    }
}
