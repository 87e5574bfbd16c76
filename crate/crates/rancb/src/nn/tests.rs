use super::*;
use ndarray::array;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn linear() -> OutputActivation {
    OutputActivation::Linear
}

#[test]
fn zero_net_outputs_zero() {
    let net = Mlp::zeroed(&[2, 4, 3], linear()).unwrap();
    let y = net.forward(&[3.2, -1.0]).unwrap();
    assert_eq!(y, vec![0.0, 0.0, 0.0]);
}

#[test]
fn affine_identity() {
    let mut net = Mlp::zeroed(&[1, 1], linear()).unwrap();
    net.set_params_flat(&[2.0, 1.0]).unwrap();
    let y = net.forward(&[3.0]).unwrap();
    assert_eq!(y[0], 7.0);
}

#[test]
fn two_layer_rectifier_hand_case() {
    // 2 -> 1 -> 1, all weights 1, biases 0.
    let mut net = Mlp::zeroed(&[2, 1, 1], linear()).unwrap();
    net.set_params_flat(&[1.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    assert_eq!(net.forward(&[1.0, -2.0]).unwrap()[0], 0.0);
    assert_eq!(net.forward(&[2.0, -1.0]).unwrap()[0], 1.0);
}

#[test]
fn forward_dimension_mismatch() {
    let net = Mlp::zeroed(&[2, 1], linear()).unwrap();
    assert!(net.forward(&[1.0]).is_err());
}

#[test]
fn forward_is_pure_and_deterministic() {
    let mut rng = StdRng::seed_from_u64(1);
    let net = Mlp::new(&[3, 8, 2], linear(), &mut rng).unwrap();
    let x = [0.3, -1.2, 0.9];
    let a = net.forward(&x).unwrap();
    let b = net.forward(&x).unwrap();
    assert_eq!(a, b, "bitwise-identical outputs expected");
}

#[test]
fn backward_zero_upstream_gives_zero_grads() {
    let mut rng = StdRng::seed_from_u64(2);
    let net = Mlp::new(&[2, 4, 3], linear(), &mut rng).unwrap();
    let (g, dx) = net.backward(&[0.5, -0.5], &[0.0, 0.0, 0.0]).unwrap();
    assert!(g.flatten().iter().all(|&v| v == 0.0));
    assert!(dx.iter().all(|&v| v == 0.0));
}

#[test]
fn backward_affine_derivatives() {
    let mut net = Mlp::zeroed(&[1, 1], linear()).unwrap();
    let w = 2.5;
    net.set_params_flat(&[w, 1.0]).unwrap();
    let x = 3.0;
    let (g, dx) = net.backward(&[x], &[1.0]).unwrap();
    let flat = g.flatten();
    assert_eq!(flat[0], x, "dW = x");
    assert_eq!(flat[1], 1.0, "db = 1");
    assert_eq!(dx[0], w, "dx = w");
}

/// Central finite differences of `<upstream, forward(net, x)>`.
pub fn fd_param_grads(net: &Mlp, x: &[f64], upstream: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let obj = |n: &Mlp, xv: &[f64]| -> f64 {
        n.forward(xv)
            .unwrap()
            .iter()
            .zip(upstream)
            .map(|(y, u)| y * u)
            .sum()
    };
    let base = net.params_flat();
    let mut pg = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = net.clone();
        let mut minus = net.clone();
        let mut p = base.clone();
        p[i] += h;
        plus.set_params_flat(&p).unwrap();
        p[i] -= 2.0 * h;
        minus.set_params_flat(&p).unwrap();
        pg.push((obj(&plus, x) - obj(&minus, x)) / (2.0 * h));
    }
    let mut xg = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        xg.push((obj(net, &xp) - obj(net, &xm)) / (2.0 * h));
    }
    (pg, xg)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

/// True when some hidden pre-activation sits within `margin` of the rectifier
/// kink, where finite differences are invalid.
pub fn near_relu_kink(net: &Mlp, x: &[f64], margin: f64) -> bool {
    let mut a = ndarray::Array1::from(x.to_vec());
    let n = net.layers().len();
    for (i, layer) in net.layers().iter().enumerate() {
        let z = a.dot(&layer.w) + &layer.b;
        if i + 1 < n && z.iter().any(|v| v.abs() < margin) {
            return true;
        }
        a = z.mapv(|v| if v > 0.0 { v } else { 0.0 });
    }
    false
}

pub fn random_net_case(rng: &mut StdRng) -> (Mlp, Vec<f64>, Vec<f64>) {
    let arch_pool: [&[usize]; 4] = [&[4, 8, 8, 3], &[3, 8, 2], &[2, 5, 5, 1], &[1, 4, 1]];
    let sizes = arch_pool[rng.gen_range(0..arch_pool.len())];
    let net = Mlp::new(sizes, OutputActivation::Linear, rng).unwrap();
    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..*sizes.last().unwrap())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    (net, x, u)
}

#[test]
fn gradient_check_random_nets() {
    let mut rng = StdRng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 25 {
        let (net, x, u) = random_net_case(&mut rng);
        if near_relu_kink(&net, &x, 1e-3) {
            continue;
        }
        let (g, dx) = net.backward(&x, &u).unwrap();
        let (fd_p, fd_x) = fd_param_grads(&net, &x, &u, 1e-5);
        assert!(max_rel_err(&g.flatten(), &fd_p) <= 1e-4);
        assert!(max_rel_err(&dx, &fd_x) <= 1e-4);
        checked += 1;
    }
}

#[test]
fn squash_gradient_check() {
    let mut rng = StdRng::seed_from_u64(7);
    let out = OutputActivation::Squash {
        lo: array![-2.0, 0.0],
        hi: array![2.0, 1.0],
    };
    for _ in 0..10 {
        let net = Mlp::new(&[3, 6, 2], out.clone(), &mut rng).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if near_relu_kink(&net, &x, 1e-3) {
            continue;
        }
        let u = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let (g, dx) = net.backward(&x, &u).unwrap();
        let (fd_p, fd_x) = fd_param_grads(&net, &x, &u, 1e-5);
        assert!(max_rel_err(&g.flatten(), &fd_p) <= 1e-4);
        assert!(max_rel_err(&dx, &fd_x) <= 1e-4);
    }
}

#[test]
fn squash_output_strictly_inside_box() {
    let mut rng = StdRng::seed_from_u64(3);
    let out = OutputActivation::Squash {
        lo: array![-2.0, 0.5],
        hi: array![2.0, 1.5],
    };
    let net = Mlp::new(&[2, 8, 2], out, &mut rng).unwrap();
    for _ in 0..200 {
        let x = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
        let y = net.forward(&x).unwrap();
        assert!(y[0] > -2.0 && y[0] < 2.0);
        assert!(y[1] > 0.5 && y[1] < 1.5);
    }
}

#[test]
fn zeroed_squash_net_outputs_midpoint() {
    let out = OutputActivation::Squash {
        lo: array![-2.0],
        hi: array![2.0],
    };
    let net = Mlp::zeroed(&[3, 4, 1], out).unwrap();
    let y = net.forward(&[0.4, -0.7, 12.0]).unwrap();
    assert_eq!(y[0], 0.0);
}

#[test]
fn adam_zero_gradient_is_noop() {
    let mut st = AdamState::new(3, 1e-3);
    let mut params = vec![1.0, -2.0, 0.5];
    st.step(&mut params, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(params, vec![1.0, -2.0, 0.5]);
    assert_eq!(st.step_count(), 1);
}

#[test]
fn adam_first_step_is_lr_times_sign() {
    for &g in &[0.7, -3.0, 12.5] {
        let mut st = AdamState::new(1, 1e-3);
        let mut params = vec![0.0];
        st.step(&mut params, &[g]).unwrap();
        let delta = params[0];
        assert!((delta + 1e-3 * g.signum()).abs() < 1e-6, "g={g}, delta={delta}");
    }
}

/// Independent scalar Adam recurrence, used as an oracle for the update rule.
fn scalar_adam_trace(grads: &[f64], lr: f64) -> Vec<f64> {
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let (mut m, mut v, mut p) = (0.0, 0.0, 0.0);
    let mut out = Vec::new();
    for (t, &g) in grads.iter().enumerate() {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1_pow(b1, t + 1));
        let vh = v / (1.0 - b1_pow(b2, t + 1));
        p -= lr * mh / (vh.sqrt() + eps);
        out.push(p);
    }
    out
}

fn b1_pow(b: f64, t: usize) -> f64 {
    b.powi(t as i32)
}

#[test]
fn adam_matches_scalar_recurrence_and_contracts() {
    let g = 0.8;
    let oracle = scalar_adam_trace(&[g, g], 1e-3);
    let mut st = AdamState::new(1, 1e-3);
    let mut params = vec![0.0];
    st.step(&mut params, &[g]).unwrap();
    let first = params[0];
    st.step(&mut params, &[g]).unwrap();
    let second = params[0];
    assert!((first - oracle[0]).abs() < 1e-12);
    assert!((second - oracle[1]).abs() < 1e-12);
    // second step magnitude bounded by the first
    assert!((second - first).abs() <= first.abs() + 1e-9);
}

#[test]
fn adam_rejects_non_finite_gradient() {
    let mut st = AdamState::new(1, 1e-3);
    let mut params = vec![0.0];
    assert!(st.step(&mut params, &[f64::NAN]).is_err());
}
