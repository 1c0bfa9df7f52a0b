//! Compact soft actor-critic.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::buffer::Batch;
use super::nn::{Adam, Mlp};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

const LOG_STD_MIN: f64 = -5.0;
const LOG_STD_MAX: f64 = 1.0;
const HALF_LOG_TAU: f64 = 0.918_938_533_204_672_8;
const CHECKPOINT_HEADER: &str = "stl-shield-checkpoint 1";

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Radial squash `a = u_max tanh(|z|) z/|z|` of a pre-activation `z` onto
/// the input ball, with the log-determinant of its Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squash {
    pub a: Vec2,
    pub log_det: f64,
    /// `d log_det / dz = k z`.
    k: f64,
    /// Jacobian `g I + q z z^T`.
    g: f64,
    q: f64,
}

impl Squash {
    pub fn new(z: Vec2, u_max: f64) -> Self {
        let r = z.norm();
        let t = r.tanh();
        let log_one_minus_t2 = 2.0 * (std::f64::consts::LN_2 - r - softplus(-2.0 * r));
        let (log_t_over_r, k, g_over_umax, q_over_umax) = if r < 1e-4 {
            let r2 = r * r;
            (-r2 / 3.0, -8.0 / 3.0 + 44.0 * r2 / 45.0, 1.0 - r2 / 3.0, -2.0 / 3.0 + 8.0 * r2 / 15.0)
        } else {
            let dlog = -2.0 * t + (1.0 - t * t) / t - 1.0 / r;
            (
                (t / r).ln(),
                dlog / r,
                t / r,
                (r * (1.0 - t * t) - t) / (r * r * r),
            )
        };
        Squash {
            a: z * (u_max * g_over_umax),
            log_det: 2.0 * u_max.ln() + log_one_minus_t2 + log_t_over_r,
            k,
            g: u_max * g_over_umax,
            q: u_max * q_over_umax,
        }
    }

    fn grad_log_det(&self, z: Vec2) -> Vec2 {
        z * self.k
    }

    /// `J^T v` (the Jacobian is symmetric).
    fn jt(&self, z: Vec2, v: Vec2) -> Vec2 {
        v * self.g + z * (self.q * z.dot(v))
    }
}

fn log_std(raw: f64) -> (f64, f64) {
    let th = raw.tanh();
    let half = 0.5 * (LOG_STD_MAX - LOG_STD_MIN);
    (LOG_STD_MIN + half * (th + 1.0), half * (1.0 - th * th))
}

/// Inverse of `log_std`.
fn log_std_raw(ls: f64) -> f64 {
    let half = 0.5 * (LOG_STD_MAX - LOG_STD_MIN);
    ((ls - LOG_STD_MIN) / half - 1.0).clamp(-0.999, 0.999).atanh()
}

/// Samples of the squashed Gaussian policy for a batch.
struct PolicySample {
    a: Vec<Vec2>,
    logp: Array1<f64>,
    z: Vec<Vec2>,
    sq: Vec<Squash>,
    sigma: Vec<Vec2>,
    dls_draw: Vec<Vec2>,
}

/// Loss value, flat gradient and mean policy log-density of an actor step.
#[derive(Debug, Clone)]
pub struct ActorGrad {
    pub loss: f64,
    pub grad: Array1<f64>,
    pub mean_logp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct Sac {
    pub actor: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    q1_target: Mlp,
    q2_target: Mlp,
    pub log_alpha: f64,
    opt_actor: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
    opt_alpha: Adam,
    pub u_max: f64,
    gamma: f64,
    tau: f64,
    target_entropy: f64,
}

impl Sac {
    pub fn new(obs_dim: usize, u_max: f64, cfg: &TrainConfig, rng: &mut impl Rng) -> Self {
        let sizes = |inp: usize, out: usize| {
            let mut v = vec![inp];
            v.extend(&cfg.hidden);
            v.push(out);
            v
        };
        let mut actor = Mlp::new(&sizes(obs_dim, 4), rng);
        let raw = log_std_raw(cfg.init_std.ln());
        actor.set_output_bias(2, raw);
        actor.set_output_bias(3, raw);
        let q1 = Mlp::new(&sizes(obs_dim + 2, 1), rng);
        let q2 = Mlp::new(&sizes(obs_dim + 2, 1), rng);
        Sac {
            opt_actor: Adam::new(actor.params.len(), cfg.actor_lr),
            opt_q1: Adam::new(q1.params.len(), cfg.critic_lr),
            opt_q2: Adam::new(q2.params.len(), cfg.critic_lr),
            opt_alpha: Adam::new(1, cfg.alpha_lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            log_alpha: cfg.init_alpha.ln(),
            u_max,
            gamma: cfg.gamma_rl,
            tau: cfg.tau,
            target_entropy: cfg.target_entropy.unwrap_or(-2.0),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Action for one observation: the squashed mean, or the policy sample
    /// for the standard normal draw `xi`.
    pub fn act(&self, obs: &[f64], xi: Option<Vec2>) -> Vec2 {
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("row vector");
        let out = self.actor.forward(x);
        let o = out.output().row(0);
        let mu = Vec2::new(o[0], o[1]);
        let z = match xi {
            None => mu,
            Some(xi) => {
                let (lx, _) = log_std(o[2]);
                let (ly, _) = log_std(o[3]);
                mu + Vec2::new(lx.exp() * xi.x, ly.exp() * xi.y)
            }
        };
        Squash::new(z, self.u_max).a.clamp_norm(self.u_max)
    }

    fn sample_policy(&self, fwd_out: &Array2<f64>, noise: ArrayView2<f64>) -> PolicySample {
        let b = fwd_out.nrows();
        let mut s = PolicySample {
            a: Vec::with_capacity(b),
            logp: Array1::zeros(b),
            z: Vec::with_capacity(b),
            sq: Vec::with_capacity(b),
            sigma: Vec::with_capacity(b),
            dls_draw: Vec::with_capacity(b),
        };
        for i in 0..b {
            let o = fwd_out.row(i);
            let (lx, dx) = log_std(o[2]);
            let (ly, dy) = log_std(o[3]);
            let sigma = Vec2::new(lx.exp(), ly.exp());
            let xi = Vec2::new(noise[[i, 0]], noise[[i, 1]]);
            let z = Vec2::new(o[0], o[1]) + sigma.hadamard(xi);
            let sq = Squash::new(z, self.u_max);
            s.logp[i] = -0.5 * xi.norm_sq() - lx - ly - 2.0 * HALF_LOG_TAU - sq.log_det;
            s.a.push(sq.a);
            s.z.push(z);
            s.sq.push(sq);
            s.sigma.push(sigma);
            s.dls_draw.push(Vec2::new(dx, dy));
        }
        s
    }

    fn critic_input(&self, obs: ArrayView2<f64>, act: &[Vec2]) -> Array2<f64> {
        let a = Array2::from_shape_fn((act.len(), 2), |(i, j)| {
            let v = act[i] / self.u_max;
            if j == 0 {
                v.x
            } else {
                v.y
            }
        });
        concatenate![Axis(1), obs, a]
    }

    fn batch_actions(batch: &Batch) -> Vec<Vec2> {
        batch.act.rows().into_iter().map(|r| Vec2::new(r[0], r[1])).collect()
    }

    /// Soft Bellman targets with next-state policy noise `noise`.
    pub fn targets(&self, batch: &Batch, noise: ArrayView2<f64>) -> Array1<f64> {
        let fwd = self.actor.forward(batch.next.view());
        let s = self.sample_policy(fwd.output(), noise);
        let inp = self.critic_input(batch.next.view(), &s.a);
        let q1 = self.q1_target.forward(inp.view());
        let q2 = self.q2_target.forward(inp.view());
        let alpha = self.alpha();
        Array1::from_shape_fn(batch.len(), |i| {
            let q = q1.output()[[i, 0]].min(q2.output()[[i, 0]]);
            batch.rew[i] + self.gamma * (q - alpha * s.logp[i])
        })
    }

    /// Half mean squared TD error of critic `which` (1 or 2) and its gradient.
    pub fn critic_loss_grad(&self, which: usize, batch: &Batch, y: &Array1<f64>) -> (f64, Array1<f64>) {
        let net = if which == 1 { &self.q1 } else { &self.q2 };
        let inp = self.critic_input(batch.obs.view(), &Self::batch_actions(batch));
        let fwd = net.forward(inp.view());
        let n = batch.len() as f64;
        let err = &fwd.output().column(0) - y;
        let loss = 0.5 * err.mapv(|e| e * e).sum() / n;
        let dout = (err / n).insert_axis(Axis(1));
        (loss, net.backward(&fwd, dout.view()).0)
    }

    /// Entropy-regularized actor loss `mean(alpha log pi - min Q)` for fixed
    /// reparameterization noise, and its gradient.
    pub fn actor_loss_grad(&self, batch: &Batch, noise: ArrayView2<f64>) -> ActorGrad {
        let b = batch.len();
        let n = b as f64;
        let fwd = self.actor.forward(batch.obs.view());
        let s = self.sample_policy(fwd.output(), noise);
        let inp = self.critic_input(batch.obs.view(), &s.a);
        let f1 = self.q1.forward(inp.view());
        let f2 = self.q2.forward(inp.view());
        let mut d1 = Array2::zeros((b, 1));
        let mut d2 = Array2::zeros((b, 1));
        let alpha = self.alpha();
        let mut loss = 0.0;
        for i in 0..b {
            let (a, c) = (f1.output()[[i, 0]], f2.output()[[i, 0]]);
            if a <= c {
                d1[[i, 0]] = 1.0;
            } else {
                d2[[i, 0]] = 1.0;
            }
            loss += alpha * s.logp[i] - a.min(c);
        }
        let (_, g1) = self.q1.backward(&f1, d1.view());
        let (_, g2) = self.q2.backward(&f2, d2.view());
        let obs_dim = self.obs_dim();
        let mut dout = Array2::zeros((b, 4));
        for i in 0..b {
            let dq = Vec2::new(
                g1[[i, obs_dim]] + g2[[i, obs_dim]],
                g1[[i, obs_dim + 1]] + g2[[i, obs_dim + 1]],
            ) / self.u_max;
            let z = s.z[i];
            let dz = (s.sq[i].grad_log_det(z) * -alpha - s.sq[i].jt(z, dq)) / n;
            let xi = Vec2::new(noise[[i, 0]], noise[[i, 1]]);
            let dls = Vec2::new(-alpha / n, -alpha / n) + dz.hadamard(s.sigma[i]).hadamard(xi);
            dout[[i, 0]] = dz.x;
            dout[[i, 1]] = dz.y;
            dout[[i, 2]] = dls.x * s.dls_draw[i].x;
            dout[[i, 3]] = dls.y * s.dls_draw[i].y;
        }
        let (grad, _) = self.actor.backward(&fwd, dout.view());
        ActorGrad {
            loss: loss / n,
            grad,
            mean_logp: s.logp.mean().unwrap_or(0.0),
        }
    }

    fn noise(rng: &mut ChaCha8Rng, b: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((b, 2), || rng.sample(StandardNormal))
    }

    /// One gradient step on both critics, the actor and the temperature,
    /// followed by a soft target update.
    pub fn update(&mut self, batch: &Batch, rng: &mut ChaCha8Rng) -> Result<UpdateStats> {
        let y = self.targets(batch, Self::noise(rng, batch.len()).view());
        let (l1, g1) = self.critic_loss_grad(1, batch, &y);
        let (l2, g2) = self.critic_loss_grad(2, batch, &y);
        self.opt_q1.step(&mut self.q1.params, &g1);
        self.opt_q2.step(&mut self.q2.params, &g2);

        let ag = self.actor_loss_grad(batch, Self::noise(rng, batch.len()).view());
        self.opt_actor.step(&mut self.actor.params, &ag.grad);

        let mut la = Array1::from_elem(1, self.log_alpha);
        let ga = Array1::from_elem(1, -(ag.mean_logp + self.target_entropy));
        self.opt_alpha.step(&mut la, &ga);
        self.log_alpha = la[0].clamp(-20.0, 5.0);

        self.q1_target.soft_update(&self.q1, self.tau);
        self.q2_target.soft_update(&self.q2, self.tau);

        let stats = UpdateStats {
            critic_loss: 0.5 * (l1 + l2),
            actor_loss: ag.loss,
            alpha: self.alpha(),
        };
        if !(stats.critic_loss.is_finite()
            && stats.actor_loss.is_finite()
            && self.actor.is_finite()
            && self.q1.is_finite()
            && self.q2.is_finite())
        {
            return Err(Error::Diverged(format!(
                "non-finite loss or parameters (critic {}, actor {})",
                stats.critic_loss, stats.actor_loss
            )));
        }
        Ok(stats)
    }

    /// Critic estimate `min(Q1, Q2)` for a batch of observations and actions.
    pub fn q_value(&self, obs: ArrayView2<f64>, act: &[Vec2]) -> Array1<f64> {
        let inp = self.critic_input(obs, act);
        let a = self.q1.forward(inp.view());
        let b = self.q2.forward(inp.view());
        ndarray::Zip::from(a.output().column(0))
            .and(b.output().column(0))
            .map_collect(|x, y| x.min(*y))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_HEADER}");
        let _ = writeln!(out, "u_max {}", self.u_max);
        let _ = writeln!(out, "log_alpha {}", self.log_alpha);
        for (name, net) in [
            ("actor", &self.actor),
            ("q1", &self.q1),
            ("q2", &self.q2),
            ("q1_target", &self.q1_target),
            ("q2_target", &self.q2_target),
        ] {
            let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "{name} {}", sizes.join(" "));
            let vals: Vec<String> = net.params.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", vals.join(" "));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Restores networks saved by [`Sac::save`]; optimizer state starts
    /// fresh.
    pub fn load(path: &Path, cfg: &TrainConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(bad("missing or unsupported version header"));
        }
        let mut scalar = |key: &str| -> Result<f64> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let (k, v) = line.split_once(' ').ok_or_else(|| bad("malformed line"))?;
            if k != key {
                return Err(bad(&format!("expected `{key}`")));
            }
            v.trim().parse().map_err(|_| bad(&format!("bad value for `{key}`")))
        };
        let u_max = scalar("u_max")?;
        let log_alpha = scalar("log_alpha")?;
        let mut nets = Vec::new();
        for name in ["actor", "q1", "q2", "q1_target", "q2_target"] {
            let head = lines.next().ok_or_else(|| bad("truncated"))?;
            let mut parts = head.split_whitespace();
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected network `{name}`")));
            }
            let sizes: Vec<usize> = parts
                .map(|p| p.parse().map_err(|_| bad("bad layer size")))
                .collect::<Result<_>>()?;
            let vals: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .map(|p| p.parse().map_err(|_| bad("bad parameter")))
                .collect::<Result<_>>()?;
            nets.push(Mlp::from_params(&sizes, Array1::from(vals)).ok_or_else(|| bad("parameter count mismatch"))?);
        }
        let mut it = nets.into_iter();
        let (actor, q1, q2, q1_target, q2_target) = (
            it.next().expect("five networks"),
            it.next().expect("five networks"),
            it.next().expect("five networks"),
            it.next().expect("five networks"),
            it.next().expect("five networks"),
        );
        if actor.output_dim() != 4 || q1.input_dim() != actor.input_dim() + 2 {
            return Err(bad("inconsistent network shapes"));
        }
        Ok(Sac {
            opt_actor: Adam::new(actor.params.len(), cfg.actor_lr),
            opt_q1: Adam::new(q1.params.len(), cfg.critic_lr),
            opt_q2: Adam::new(q2.params.len(), cfg.critic_lr),
            opt_alpha: Adam::new(1, cfg.alpha_lr),
            actor,
            q1,
            q2,
            q1_target,
            q2_target,
            log_alpha,
            u_max,
            gamma: cfg.gamma_rl,
            tau: cfg.tau,
            target_entropy: cfg.target_entropy.unwrap_or(-2.0),
        })
    }
}
