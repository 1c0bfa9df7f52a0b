//! Small fully connected networks with hand-written backpropagation.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

/// Multilayer perceptron with `tanh` hidden units and a linear output.
/// Parameters live in one flat vector, layer by layer (`W` row-major as
/// `out x in`, then `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Array1<f64>,
}

/// Activations of every layer for one batch, input first.
#[derive(Debug, Clone)]
pub struct Forward {
    acts: Vec<Array2<f64>>,
}

impl Forward {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("at least the input")
    }
}

impl Mlp {
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let n: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let mut params = Array1::zeros(n);
        let mut off = 0;
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            if l == last {
                bound *= 0.1;
            }
            for p in params.slice_mut(s![off..off + fan_in * fan_out]).iter_mut() {
                *p = rng.random_range(-bound..bound);
            }
            off += fan_in * fan_out + fan_out;
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: &[usize], params: Array1<f64>) -> Option<Self> {
        let n: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        (sizes.len() >= 2 && params.len() == n).then(|| Mlp {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    fn offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut off = 0;
        self.sizes.windows(2).map(move |w| {
            let o = off;
            off += w[0] * w[1] + w[1];
            (o, w[0], w[1])
        })
    }

    fn layer(&self, off: usize, fan_in: usize, fan_out: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let w = self
            .params
            .slice(s![off..off + fan_in * fan_out])
            .into_shape_with_order((fan_out, fan_in))
            .expect("contiguous layer");
        let b = self.params.slice(s![off + fan_in * fan_out..off + fan_in * fan_out + fan_out]);
        (w, b)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Forward {
        let mut acts = vec![x.to_owned()];
        let layers = self.sizes.len() - 1;
        for (l, (off, fan_in, fan_out)) in self.offsets().enumerate() {
            let (w, b) = self.layer(off, fan_in, fan_out);
            let mut z = acts[l].dot(&w.t()) + b;
            if l + 1 < layers {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        Forward { acts }
    }

    /// Gradients of `sum(dout * output)` with respect to the parameters and
    /// to the input.
    pub fn backward(&self, fwd: &Forward, dout: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
        let mut grad = Array1::zeros(self.params.len());
        let offsets: Vec<_> = self.offsets().collect();
        let mut delta = dout.to_owned();
        for l in (0..offsets.len()).rev() {
            let (off, fan_in, fan_out) = offsets[l];
            if l + 1 < offsets.len() {
                let a = &fwd.acts[l + 1];
                delta.zip_mut_with(a, |d, &a| *d *= 1.0 - a * a);
            }
            let prev = &fwd.acts[l];
            let gw = delta.t().dot(prev);
            grad.slice_mut(s![off..off + fan_in * fan_out])
                .assign(&Array1::from_iter(gw.iter().copied()));
            grad.slice_mut(s![off + fan_in * fan_out..off + fan_in * fan_out + fan_out])
                .assign(&delta.sum_axis(Axis(0)));
            let (w, _) = self.layer(off, fan_in, fan_out);
            delta = delta.dot(&w);
        }
        (grad, delta)
    }

    /// Sets the bias of output unit `k`.
    pub fn set_output_bias(&mut self, k: usize, value: f64) {
        let n = self.params.len();
        let out = self.output_dim();
        assert!(k < out, "output {k} out of range");
        self.params[n - out + k] = value;
    }

    /// `self <- (1 - tau) self + tau other`.
    pub fn soft_update(&mut self, other: &Mlp, tau: f64) {
        self.params.zip_mut_with(&other.params, |a, &b| *a += tau * (b - *a));
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }
}

/// Adam optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    m: Array1<f64>,
    v: Array1<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: Array1::zeros(n),
            v: Array1::zeros(n),
            t: 0,
        }
    }

    /// Gradient descent step on `params`.
    pub fn step(&mut self, params: &mut Array1<f64>, grad: &Array1<f64>) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let lr = self.lr;
        ndarray::Zip::from(params)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = Self::B1 * *m + (1.0 - Self::B1) * g;
                *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[3, 5, 4, 2], &mut rng);
        let x = array![[0.3, -0.2, 0.9], [-1.0, 0.5, 0.1]];
        let dout = array![[1.0, -0.5], [0.25, 2.0]];
        let loss = |n: &Mlp, x: &Array2<f64>| (n.forward(x.view()).output() * &dout).sum();
        let fwd = net.forward(x.view());
        let (g, gx) = net.backward(&fwd, dout.view());
        let h = 1e-6;
        for i in 0..net.params.len() {
            let mut p = net.clone();
            p.params[i] += h;
            let mut m = net.clone();
            m.params[i] -= h;
            let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "param {i}: {fd} vs {}", g[i]);
        }
        for i in 0..2 {
            for j in 0..3 {
                let mut xp = x.clone();
                xp[[i, j]] += h;
                let mut xm = x.clone();
                xm[[i, j]] -= h;
                let fd = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
                assert!((fd - gx[[i, j]]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = array![3.0, -2.0];
        let mut opt = Adam::new(2, 0.05);
        for _ in 0..2000 {
            let g = p.mapv(|v| 2.0 * v);
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|v| v.abs() < 1e-3));
    }
}
