use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check::finite_difference;
use super::*;

fn rand_t(shape: [usize; 4], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Weighted sum so that every output element gets a distinct cotangent.
fn probe(g: &mut Graph, v: Var, seed: u64) -> Var {
    let w = rand_t(g.shape(v), seed ^ 0xABCD);
    let w = g.constant(w);
    let p = g.mul(v, w);
    g.mean(p)
}

fn assert_grad(inputs: &[Tensor], which: usize, build: impl Fn(&mut Graph, &[Var]) -> Var) {
    let r = finite_difference(inputs, which, 1e-6, 64, build);
    assert!(r.rel_error < 1e-6, "relative error {} (abs {})", r.rel_error, r.max_abs_error);
}

#[test]
fn elementwise_ops() {
    let a = rand_t([2, 2, 3, 3], 1);
    let b = rand_t([2, 2, 3, 3], 2).map(|v| v + 3.0);
    for which in 0..2 {
        assert_grad(&[a.clone(), b.clone()], which, |g, v| {
            let s = g.add(v[0], v[1]);
            let d = g.sub(s, v[1]);
            let m = g.mul(d, v[1]);
            let q = g.div(m, v[1]);
            let q2 = g.div(v[0], v[1]);
            let t = g.add(q, q2);
            let t = g.affine(t, 1.7, -0.2);
            probe(g, t, 3)
        });
    }
    assert_grad(std::slice::from_ref(&a), 0, |g, v| {
        let l = g.leaky_relu(v[0], 0.2);
        let s = g.softplus(l);
        let c = g.cos(s);
        let sn = g.sin(v[0]);
        let t = g.add(c, sn);
        probe(g, t, 4)
    });
}

#[test]
fn conv_gradients() {
    for k in [1, 3] {
        let x = rand_t([2, 3, 5, 4], 5);
        let w = rand_t([4, 3, k, k], 6);
        let b = rand_t([1, 4, 1, 1], 7);
        for which in 0..3 {
            assert_grad(&[x.clone(), w.clone(), b.clone()], which, |g, v| {
                let y = g.conv2d(v[0], v[1], Some(v[2]));
                probe(g, y, 8)
            });
        }
    }
}

#[test]
fn spectral_gradients() {
    let x = rand_t([1, 2, 4, 6], 9);
    assert_grad(std::slice::from_ref(&x), 0, |g, v| {
        let (re, im) = g.spectrum(v[0]);
        let s = g.add(re, im);
        probe(g, s, 10)
    });
    assert_grad(std::slice::from_ref(&x), 0, |g, v| {
        let (a, p) = g.decompose(v[0]);
        let s = g.add(a, p);
        probe(g, s, 11)
    });
    let re = rand_t([1, 2, 4, 6], 12);
    let im = rand_t([1, 2, 4, 6], 13);
    for which in 0..2 {
        assert_grad(&[re.clone(), im.clone()], which, |g, v| {
            let y = g.inverse_spectrum_real(v[0], v[1]);
            probe(g, y, 14)
        });
    }
    let amp = rand_t([1, 2, 4, 6], 15).map(|v| v.abs() + 0.1);
    for which in 0..2 {
        assert_grad(&[amp.clone(), re.clone()], which, |g, v| {
            let y = g.recompose(v[0], v[1]);
            probe(g, y, 16)
        });
    }
}

#[test]
fn structural_ops() {
    let x = rand_t([2, 8, 4, 4], 17);
    let y = rand_t([2, 3, 4, 4], 18);
    for which in 0..2 {
        assert_grad(&[x.clone(), y.clone()], which, |g, v| {
            let c = g.concat_channels(&[v[0], v[1]]);
            let s = g.slice_channels(c, 2, 8);
            let ps = g.pixel_shuffle(s);
            let p = g.avg_pool2(ps);
            let u = g.upsample2(p);
            probe(g, u, 19)
        });
    }
}

#[test]
fn normalization_ops() {
    let x = rand_t([2, 3, 4, 5], 20);
    let s = rand_t([1, 3, 1, 1], 21);
    let b = rand_t([1, 3, 1, 1], 22);
    for which in 0..3 {
        assert_grad(&[x.clone(), s.clone(), b.clone()], which, |g, v| {
            let n = g.instance_norm(v[0], 1e-5);
            let a = g.channel_affine(n, v[1], v[2]);
            probe(g, a, 23)
        });
    }
}

#[test]
fn reductions_and_blur() {
    let x = rand_t([1, 2, 13, 14], 24);
    let k: Rc<[f64]> = Rc::from(vec![0.25, 0.5, 0.25, 0.1, 0.05]);
    assert_grad(std::slice::from_ref(&x), 0, |g, v| {
        let b = g.blur_valid(v[0], k.clone());
        let sq = g.square(b);
        let m = g.mean_abs(sq);
        let m2 = g.mean(v[0]);
        g.add(m, m2)
    });
}

#[test]
fn circular_padding() {
    let x = rand_t([1, 2, 3, 4], 25);
    for pad in [1, 5] {
        assert_grad(std::slice::from_ref(&x), 0, |g, v| {
            let p = g.pad_circular(v[0], pad);
            probe(g, p, 26)
        });
    }
    let mut g = Graph::new();
    let t = g.constant(Tensor::from_fn([1, 1, 2, 3], |[_, _, y, x]| (y * 3 + x) as f64));
    let p = g.pad_circular(t, 1);
    assert_eq!(g.value(p).plane(0, 0)[..5], [5.0, 3.0, 4.0, 5.0, 3.0]);
}

#[test]
fn constants_get_no_gradient() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::full([1, 1, 2, 2], 1.0));
    let b = g.leaf(Tensor::full([1, 1, 2, 2], 2.0), true);
    let p = g.mul(a, b);
    let m = g.mean(p);
    let grads = g.backward(m);
    assert!(grads.get(a).is_none());
    assert_eq!(grads.get(b).unwrap().data(), &[0.25; 4]);
}

#[test]
fn pixel_shuffle_layout() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_vec([1, 4, 1, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let y = g.pixel_shuffle(x);
    assert_eq!(g.shape(y), [1, 1, 2, 2]);
    assert_eq!(g.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
}
