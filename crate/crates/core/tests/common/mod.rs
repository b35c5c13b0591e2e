//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::rc::Rc;

use matgan_core::rng::{self, Rng};
use matgan_core::tensor::{self, grad, Tensor};
use matgan_core::train::{gradient_penalty, Critic};
use matgan_core::voxel::VoxelGrid;
use matgan_core::Result;
use rand::Rng as _;

pub type T = Tensor<f64>;

// ---------------------------------------------------------------- gradients

/// Flat values and shape of each input.
pub type Inputs = Vec<(Vec<f64>, Vec<usize>)>;

/// One differentiable function under test and a sampler for its inputs.
pub struct GradCase {
    pub name: &'static str,
    pub inputs: fn(&mut Rng) -> Inputs,
    pub f: fn(&[T]) -> T,
}

pub fn uniform(r: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> (Vec<f64>, Vec<usize>) {
    let n = shape.iter().product();
    ((0..n).map(|_| r.random_range(lo..hi)).collect(), shape.to_vec())
}

/// Uniform values pushed at least `gap` away from zero.
pub fn away_from_zero(r: &mut Rng, shape: &[usize], gap: f64) -> (Vec<f64>, Vec<usize>) {
    let (mut v, s) = uniform(r, shape, -1.0, 1.0);
    for x in &mut v {
        *x += gap * x.signum();
    }
    (v, s)
}

/// Distinct values (a shuffled ladder) so that max-pooling has no ties.
pub fn distinct(r: &mut Rng, shape: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n: usize = shape.iter().product();
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - n as f64 * 0.05).collect();
    for i in (1..n).rev() {
        v.swap(i, r.random_range(0..=i));
    }
    (v, shape.to_vec())
}

/// Weighted sum against a fixed pseudo-random pattern, so that every
/// output element influences the scalar.
pub fn probe(y: &T) -> T {
    let w: Vec<f64> = (0..y.numel()).map(|i| ((i * 7919 % 101) as f64 / 50.0) - 1.0).collect();
    y.mul(&Tensor::new(w, y.shape()).unwrap()).unwrap().sum_all()
}

fn leaves(inputs: &[(Vec<f64>, Vec<usize>)]) -> Vec<T> {
    inputs.iter().map(|(d, s)| Tensor::param(d.clone(), s).unwrap()).collect()
}

/// Central finite differences of `f` with respect to every input element.
pub fn finite_difference(f: &dyn Fn(&[T]) -> f64, inputs: &[(Vec<f64>, Vec<usize>)], h: f64) -> Vec<Vec<f64>> {
    let consts = |ins: &[(Vec<f64>, Vec<usize>)]| -> Vec<T> {
        ins.iter().map(|(d, s)| Tensor::param(d.clone(), s).unwrap()).collect()
    };
    let mut out = Vec::new();
    for k in 0..inputs.len() {
        let mut g = Vec::with_capacity(inputs[k].0.len());
        for i in 0..inputs[k].0.len() {
            let mut plus = inputs.to_vec();
            plus[k].0[i] += h;
            let mut minus = inputs.to_vec();
            minus[k].0[i] -= h;
            g.push((f(&consts(&plus)) - f(&consts(&minus))) / (2.0 * h));
        }
        out.push(g);
    }
    out
}

/// Norm-wise relative error `‖a − b‖ / max(‖b‖, 1e-8)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

/// Largest relative error between autodiff and finite differences over all
/// inputs of one instance.
pub fn check_instance(case: &GradCase, inputs: &[(Vec<f64>, Vec<usize>)]) -> f64 {
    let xs = leaves(inputs);
    let out = (case.f)(&xs);
    let refs: Vec<&T> = xs.iter().collect();
    let analytic = grad(&out, &refs, false).unwrap();
    let f = case.f;
    let numeric = finite_difference(&|t: &[T]| f(t).item(), inputs, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(a.data(), n))
        .fold(0.0, f64::max)
}

/// Worst error of `case` over `instances` random draws.
pub fn check_case(case: &GradCase, instances: usize, seed: u64) -> f64 {
    let mut r = rng::stream(seed, case.name);
    (0..instances)
        .map(|_| check_instance(case, &(case.inputs)(&mut r)))
        .fold(0.0, f64::max)
}

fn one(r: &mut Rng, shape: &[usize]) -> Vec<(Vec<f64>, Vec<usize>)> {
    vec![uniform(r, shape, -1.0, 1.0)]
}

fn two(r: &mut Rng, a: &[usize], b: &[usize]) -> Vec<(Vec<f64>, Vec<usize>)> {
    vec![uniform(r, a, -1.0, 1.0), uniform(r, b, -1.0, 1.0)]
}

/// Gradient of `probe(op(x, w))` with respect to `x`, squared and summed:
/// differentiating it exercises the backward rules of the backward rules.
fn second_order(x: &T, w: &T, op: fn(&T, &T) -> T) -> T {
    let y = probe(&op(x, w));
    let g = grad(&y, &[x, w], true).unwrap();
    g[0].square().sum_all().add(&g[1].square().sum_all()).unwrap()
}

/// The autodiff operations, each wrapped into a scalar-valued function.
pub fn grad_cases() -> Vec<GradCase> {
    vec![
        GradCase { name: "add", inputs: |r| two(r, &[3, 4], &[3, 4]), f: |x| probe(&x[0].add(&x[1]).unwrap()) },
        GradCase { name: "sub", inputs: |r| two(r, &[5], &[5]), f: |x| probe(&x[0].sub(&x[1]).unwrap()) },
        GradCase { name: "mul", inputs: |r| two(r, &[2, 3], &[2, 3]), f: |x| probe(&x[0].mul(&x[1]).unwrap()) },
        GradCase { name: "neg", inputs: |r| one(r, &[4]), f: |x| probe(&x[0].neg()) },
        GradCase { name: "scale", inputs: |r| one(r, &[4]), f: |x| probe(&x[0].scale(-2.5)) },
        GradCase { name: "add_scalar", inputs: |r| one(r, &[4]), f: |x| probe(&x[0].add_scalar(0.7)) },
        GradCase { name: "square", inputs: |r| one(r, &[6]), f: |x| probe(&x[0].square()) },
        GradCase {
            name: "sqrt",
            inputs: |r| vec![uniform(r, &[6], 0.3, 2.0)],
            f: |x| probe(&x[0].sqrt()),
        },
        GradCase {
            name: "recip",
            inputs: |r| vec![away_from_zero(r, &[6], 0.5)],
            f: |x| probe(&x[0].recip()),
        },
        GradCase { name: "sigmoid", inputs: |r| vec![uniform(r, &[6], -4.0, 4.0)], f: |x| probe(&x[0].sigmoid()) },
        GradCase { name: "relu", inputs: |r| vec![away_from_zero(r, &[8], 0.1)], f: |x| probe(&x[0].relu()) },
        GradCase {
            name: "leaky_relu",
            inputs: |r| vec![away_from_zero(r, &[8], 0.1)],
            f: |x| probe(&x[0].leaky_relu(0.2)),
        },
        GradCase {
            name: "reshape",
            inputs: |r| one(r, &[2, 6]),
            f: |x| probe(&x[0].reshape(&[3, 4]).unwrap().square()),
        },
        GradCase { name: "sum_all", inputs: |r| one(r, &[3, 3]), f: |x| x[0].square().sum_all() },
        GradCase { name: "mean_all", inputs: |r| one(r, &[3, 3]), f: |x| x[0].square().mean_all() },
        GradCase {
            name: "expand_all",
            inputs: |r| one(r, &[]),
            f: |x| probe(&x[0].expand_all(&[2, 3]).unwrap().square()),
        },
        GradCase {
            name: "sum_inner",
            inputs: |r| one(r, &[3, 4]),
            f: |x| probe(&x[0].sum_inner(4).unwrap().square()),
        },
        GradCase {
            name: "expand_inner",
            inputs: |r| one(r, &[3]),
            f: |x| probe(&x[0].expand_inner(4).unwrap().square()),
        },
        GradCase {
            name: "sum_outer",
            inputs: |r| one(r, &[3, 4]),
            f: |x| probe(&x[0].sum_outer(3).unwrap().square()),
        },
        GradCase {
            name: "expand_outer",
            inputs: |r| one(r, &[4]),
            f: |x| probe(&x[0].expand_outer(3).unwrap().square()),
        },
        GradCase { name: "matmul", inputs: |r| two(r, &[3, 4], &[4, 2]), f: |x| probe(&x[0].matmul(&x[1]).unwrap()) },
        GradCase {
            name: "matmul_t_a",
            inputs: |r| two(r, &[4, 3], &[4, 2]),
            f: |x| probe(&x[0].matmul_t(&x[1], true, false).unwrap()),
        },
        GradCase {
            name: "matmul_t_b",
            inputs: |r| two(r, &[3, 4], &[2, 4]),
            f: |x| probe(&x[0].matmul_t(&x[1], false, true).unwrap()),
        },
        GradCase {
            name: "matmul_t_ab",
            inputs: |r| two(r, &[4, 3], &[2, 4]),
            f: |x| probe(&x[0].matmul_t(&x[1], true, true).unwrap()),
        },
        GradCase {
            name: "conv3d",
            inputs: |r| two(r, &[2, 2, 5, 5, 5], &[3, 2, 3, 3, 3]),
            f: |x| probe(&x[0].conv3d(&x[1], 2, 1).unwrap()),
        },
        GradCase {
            name: "conv3d_k4s2p1",
            inputs: |r| two(r, &[1, 2, 4, 4, 4], &[2, 2, 4, 4, 4]),
            f: |x| probe(&x[0].conv3d(&x[1], 2, 1).unwrap()),
        },
        GradCase {
            name: "conv_transpose3d",
            inputs: |r| two(r, &[2, 3, 2, 2, 2], &[3, 2, 4, 4, 4]),
            f: |x| probe(&x[0].conv_transpose3d(&x[1], 2, 1).unwrap()),
        },
        GradCase {
            name: "conv3d_second_order",
            inputs: |r| two(r, &[1, 2, 4, 4, 4], &[2, 2, 3, 3, 3]),
            f: |x| second_order(&x[0], &x[1], |a, b| a.conv3d(b, 2, 1).unwrap()),
        },
        GradCase {
            name: "conv_transpose3d_second_order",
            inputs: |r| two(r, &[1, 2, 2, 2, 2], &[2, 2, 4, 4, 4]),
            f: |x| second_order(&x[0], &x[1], |a, b| a.conv_transpose3d(b, 2, 1).unwrap()),
        },
        GradCase {
            name: "gather",
            inputs: |r| one(r, &[6]),
            f: |x| {
                let idx: Rc<[usize]> = vec![5, 0, 0, 3, 2].into();
                probe(&x[0].gather(idx, &[5]).unwrap().square())
            },
        },
        GradCase {
            name: "scatter_add",
            inputs: |r| one(r, &[5]),
            f: |x| {
                let idx: Rc<[usize]> = vec![1, 1, 0, 3, 1].into();
                probe(&x[0].scatter_add(idx, &[4]).unwrap().square())
            },
        },
        GradCase {
            name: "maxpool3d",
            inputs: |r| vec![distinct(r, &[1, 2, 4, 4, 4])],
            f: |x| probe(&x[0].maxpool3d(2, 1).unwrap().square()),
        },
        GradCase {
            name: "linear",
            inputs: |r| vec![uniform(r, &[3, 4], -1.0, 1.0), uniform(r, &[2, 4], -1.0, 1.0), uniform(r, &[2], -1.0, 1.0)],
            f: |x| probe(&tensor::linear(&x[0], &x[1], &x[2]).unwrap()),
        },
        GradCase {
            name: "adain",
            inputs: |r| {
                vec![uniform(r, &[2, 2, 2, 2, 2], -1.0, 1.0), uniform(r, &[2, 2], -1.0, 1.0), uniform(r, &[2, 2], -1.0, 1.0)]
            },
            f: |x| probe(&tensor::adain(&x[0], &x[1], &x[2], 1e-8).unwrap()),
        },
        GradCase {
            name: "l2_norm",
            inputs: |r| vec![away_from_zero(r, &[3, 4], 0.2)],
            f: |x| probe(&tensor::l2_norm_over_nonbatch_dims(&x[0]).unwrap()),
        },
    ]
}

// --------------------------------------------------------------- critics

/// `D(x) = ⟨a, x⟩` per batch item.
pub struct LinearCritic(pub T);

impl Critic<f64> for LinearCritic {
    fn score(&self, x: &T) -> Result<T> {
        let m = x.shape()[0];
        let n = x.numel() / m;
        x.reshape(&[m, n])?.matmul(&self.0.reshape(&[n, 1])?)?.reshape(&[m])
    }
}

/// `[m, 4]` packs with distinct entries starting at `v`.
pub fn packs(v: f64, m: usize) -> T {
    Tensor::new((0..m * 4).map(|i| v + i as f64 * 0.1).collect(), &[m, 4]).unwrap()
}

/// Conv, LeakyReLU, conv.
pub struct TwoLayerCritic {
    pub w1: T,
    pub w2: T,
}

impl Critic<f64> for TwoLayerCritic {
    fn score(&self, x: &T) -> Result<T> {
        let m = x.shape()[0];
        x.conv3d(&self.w1, 2, 1)?.leaky_relu(0.2).conv3d(&self.w2, 1, 0)?.reshape(&[m])
    }
}

/// Relative error of the penalty's parameter gradient for a random
/// two-layer critic, against finite differences.
pub fn penalty_gradient_error(seed: u64) -> f64 {
    let mut r = rng::stream(seed, "gp");
    let mut rand_vec = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-0.5..0.5)).collect() };
    let real = Tensor::new(rand_vec(2 * 2 * 64), &[2, 2, 4, 4, 4]).unwrap();
    let fake = Tensor::new(rand_vec(2 * 2 * 64), &[2, 2, 4, 4, 4]).unwrap();
    let params = vec![(rand_vec(3 * 2 * 64), vec![3, 2, 4, 4, 4]), (rand_vec(3 * 8), vec![1, 3, 2, 2, 2])];
    let eps = [rand_vec(1)[0] + 0.5, rand_vec(1)[0] + 0.5];
    let penalty = |p: &[T]| {
        let critic = TwoLayerCritic {
            w1: p[0].clone(),
            w2: p[1].clone(),
        };
        gradient_penalty(&critic, &real, &fake, &eps).unwrap()
    };
    let xs = leaves(&params);
    let out = penalty(&xs);
    let analytic = grad(&out, &[&xs[0], &xs[1]], false).unwrap();
    let numeric = finite_difference(&|p: &[T]| penalty(p).item(), &params, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(a.data(), n))
        .fold(0.0, f64::max)
}

/// Worst per-channel `|mean|` and `|std − 1|` after AdaIN with unit scale
/// and zero bias, over random f32 inputs of varied shapes.
pub fn adain_deviation(seed: u64) -> (f64, f64) {
    let mut r = rng::stream(seed, "adain");
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for (b, c, s) in [(3, 4, 5), (2, 8, 4), (1, 2, 8)] {
        let n = s * s * s;
        let shift: f32 = r.random_range(-3.0..3.0);
        let x: Vec<f32> = (0..b * c * n).map(|_| r.random_range(-4.0..4.0) + shift).collect();
        let x = Tensor::new(x, &[b, c, s, s, s]).unwrap();
        let y = tensor::adain(&x, &Tensor::full(&[b, c], 1.0f32), &Tensor::zeros(&[b, c]), 1e-8).unwrap();
        for ch in y.data().chunks_exact(n) {
            let mean = ch.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
            let std = (ch.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            worst_mean = worst_mean.max(mean.abs());
            worst_std = worst_std.max((std - 1.0).abs());
        }
    }
    (worst_mean, worst_std)
}

// ------------------------------------------------------------------ moments

/// The invariants evaluated from their definitions: absolute voxel-center
/// coordinates, f64 throughout, no shortcuts.
pub fn brute_force_omegas(grid: &VoxelGrid) -> Option<[f64; 3]> {
    let [nx, ny, nz] = grid.dims();
    let mut v = 0.0;
    let mut m1 = [0.0f64; 3];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                if grid.get(x, y, z) >= 0.5 {
                    v += 1.0;
                    m1[0] += x as f64 + 0.5;
                    m1[1] += y as f64 + 0.5;
                    m1[2] += z as f64 + 0.5;
                }
            }
        }
    }
    if v == 0.0 {
        return None;
    }
    let c = [m1[0] / v, m1[1] / v, m1[2] / v];
    let mut mu = [[0.0f64; 3]; 3];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                if grid.get(x, y, z) >= 0.5 {
                    let d = [x as f64 + 0.5 - c[0], y as f64 + 0.5 - c[1], z as f64 + 0.5 - c[2]];
                    for a in 0..3 {
                        for b in 0..3 {
                            mu[a][b] += d[a] * d[b];
                        }
                    }
                }
            }
        }
    }
    let o1 = mu[0][0] + mu[1][1] + mu[2][2];
    let o2 = mu[0][0] * mu[1][1] + mu[0][0] * mu[2][2] + mu[1][1] * mu[2][2]
        - mu[0][1] * mu[0][1]
        - mu[0][2] * mu[0][2]
        - mu[1][2] * mu[1][2];
    let o3 = mu[0][0] * (mu[1][1] * mu[2][2] - mu[1][2] * mu[1][2])
        - mu[0][1] * (mu[0][1] * mu[2][2] - mu[1][2] * mu[0][2])
        + mu[0][2] * (mu[0][1] * mu[1][2] - mu[1][1] * mu[0][2]);
    if o1 <= 0.0 || o2 <= 0.0 || o3 <= 0.0 {
        return None;
    }
    Some([3.0 * v.powf(5.0 / 3.0) / o1, 3.0 * v.powf(10.0 / 3.0) / o2, v.powi(5) / o3])
}

/// A 6-connected blob grown by random face-neighbor accretion inside a
/// cube of edge `size`.
pub fn random_blob(r: &mut Rng, size: usize, voxels: usize) -> VoxelGrid {
    let mut g = VoxelGrid::cube(size);
    let start = [size / 2; 3];
    let mut cells = vec![start];
    g.set(start[0], start[1], start[2], 1.0);
    while cells.len() < voxels.min(size.pow(3)) {
        let base = cells[r.random_range(0..cells.len())];
        let axis = r.random_range(0..3);
        let up = r.random_bool(0.5);
        let mut c = base;
        if up && c[axis] + 1 < size {
            c[axis] += 1;
        } else if !up && c[axis] > 0 {
            c[axis] -= 1;
        } else {
            continue;
        }
        if g.get(c[0], c[1], c[2]) == 0.0 {
            g.set(c[0], c[1], c[2], 1.0);
            cells.push(c);
        }
    }
    g
}

/// The 24 proper rotations of the cube as compositions of quarter turns.
pub fn all_rotations(g: &VoxelGrid) -> Vec<VoxelGrid> {
    let mut out = Vec::with_capacity(24);
    // Six choices for where the first axis points, four spins about it.
    let faces = [
        vec![],
        vec![1],
        vec![1, 1],
        vec![1, 1, 1],
        vec![2],
        vec![2, 2, 2],
    ];
    for face in &faces {
        let mut h = g.clone();
        for &a in face {
            h = h.rotate90(a);
        }
        for _ in 0..4 {
            out.push(h.clone());
            h = h.rotate90(0);
        }
    }
    out
}

/// 6-connected flood fill from every unvisited solid voxel; returns the
/// component sizes in discovery order.
pub fn flood_fill_sizes(g: &VoxelGrid) -> Vec<usize> {
    let [nx, ny, nz] = g.dims();
    let mut seen = vec![false; nx * ny * nz];
    let mut sizes = Vec::new();
    for start in 0..seen.len() {
        let [x, y, z] = g.coords(start);
        if seen[start] || g.get(x, y, z) < 0.5 {
            continue;
        }
        let mut stack = vec![[x, y, z]];
        seen[start] = true;
        let mut n = 0;
        while let Some(c) = stack.pop() {
            n += 1;
            for axis in 0..3 {
                for up in [false, true] {
                    let mut d = c;
                    let lim = [nx, ny, nz][axis];
                    if up && d[axis] + 1 < lim {
                        d[axis] += 1;
                    } else if !up && d[axis] > 0 {
                        d[axis] -= 1;
                    } else {
                        continue;
                    }
                    let i = g.index(d[0], d[1], d[2]);
                    if !seen[i] && g.get(d[0], d[1], d[2]) >= 0.5 {
                        seen[i] = true;
                        stack.push(d);
                    }
                }
            }
        }
        sizes.push(n);
    }
    sizes
}

/// Ω₁ of a solid ball by Simpson quadrature of the radial integrals
/// `V = ∫ 4πr² dr` and `O₁ = ∫ r²·4πr² dr` (the trace of the second moment).
pub fn ball_omega1_quadrature(steps: usize) -> f64 {
    let r = 1.0;
    let h = r / steps as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = f(0.0) + f(r);
        for i in 1..steps {
            let x = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let pi = std::f64::consts::PI;
    let v = simpson(&|x| 4.0 * pi * x * x);
    let o1 = simpson(&|x| 4.0 * pi * x.powi(4));
    3.0 * v.powf(5.0 / 3.0) / o1
}
