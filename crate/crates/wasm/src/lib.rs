//! Browser demo bindings: three interactive views over the core library.
//!
//! Every exported function takes plain scalars and returns a JSON string, so
//! the page needs no framework — a little hand-written JS feeds canvases.
//! The heavy lifting stays in `cubelab-core`; these wrappers only marshal.

use cubelab_core::seminorms::{
    gowers_recursive, kronecker_limit_rotation, nonconventional_average, Observable,
};
use cubelab_core::systems::{frac, torus_rotation, Point, StepMap};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Serialize)]
struct GowersCurve {
    n: u64,
    kind: String,
    ks: Vec<usize>,
    values: Vec<f64>,
    error: Option<String>,
}

fn observable_for(kind: &str, param: i64, n: u64, seed: u64) -> Result<Observable, String> {
    match kind {
        "quad" => Ok(Observable::Quad { a: param.max(1) }),
        "char" => Ok(Observable::Char { xi: param }),
        "arc" => Ok(Observable::Arc { lo: 0.0, hi: 0.5 }),
        "signs" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Observable::Table {
                values: (0..n)
                    .map(|_| if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 })
                    .collect(),
            })
        }
        other => Err(format!("unknown observable kind: {other}")),
    }
}

/// Box-norm profile `U_1..U_4` of an observable on `Z/N`.
pub fn gowers_curve_json(n: u64, kind: &str, param: i64, seed: u64) -> String {
    let n = n.clamp(4, 256);
    let run = || -> Result<Vec<f64>, String> {
        let table = observable_for(kind, param, n, seed)?
            .table_zn(n)
            .map_err(|e| e.to_string())?;
        (1..=4)
            .map(|k| {
                gowers_recursive(&table, k)
                    .map(|r| r.value)
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let curve = match run() {
        Ok(values) => GowersCurve {
            n,
            kind: kind.to_string(),
            ks: (1..=4).collect(),
            values,
            error: None,
        },
        Err(e) => GowersCurve {
            n,
            kind: kind.to_string(),
            ks: vec![],
            values: vec![],
            error: Some(e),
        },
    };
    serde_json::to_string(&curve).unwrap_or_default()
}

#[derive(Serialize)]
struct AverageTrajectory {
    alpha: f64,
    x0: f64,
    points: Vec<(u64, f64, f64)>,
    predicted: (f64, f64),
    error: Option<String>,
}

/// Partial nonconventional averages of `f_1 = e(ξ_1 x)`, `f_2 = e(ξ_2 x)`
/// along the rotation by `alpha`, with the resonance-sum limit.
pub fn average_trajectory_json(alpha: f64, x0: f64, xi1: i64, xi2: i64, n: u64) -> String {
    let n = n.clamp(10, 200_000);
    let run = || -> Result<AverageTrajectory, String> {
        let sys = torus_rotation(vec![frac(alpha)]).map_err(|e| e.to_string())?;
        let fs = vec![Observable::Char { xi: xi1 }, Observable::Char { xi: xi2 }];
        // Roughly log-spaced checkpoints.
        let mut marks = Vec::new();
        let mut m = 10u64;
        while m < n {
            marks.push(m);
            let step = (m / 6).max(1);
            m += step;
        }
        let out = nonconventional_average(&sys, &Point::Torus(vec![frac(x0)]), &fs, n, &marks)
            .map_err(|e| e.to_string())?;
        let predicted = kronecker_limit_rotation(&fs)
            .map_err(|e| e.to_string())?
            .eval(frac(x0));
        Ok(AverageTrajectory {
            alpha: frac(alpha),
            x0: frac(x0),
            points: out.into_iter().map(|(m, a)| (m, a.re, a.im)).collect(),
            predicted: (predicted.re, predicted.im),
            error: None,
        })
    };
    let traj = run().unwrap_or_else(|e| AverageTrajectory {
        alpha,
        x0,
        points: vec![],
        predicted: (0.0, 0.0),
        error: Some(e),
    });
    serde_json::to_string(&traj).unwrap_or_default()
}

#[derive(Serialize)]
struct NilcycleField {
    res: usize,
    x: f64,
    t3: f64,
    values: Vec<f64>,
}

/// The coboundary nilcycle `ρ(c) = Σ_v (-1)^{|v|} h(c_v)` of the
/// step-twisted skew torus, evaluated on the 3-cube with parameters
/// `(x, t1, t2, t3)` over a `(t1, t2)` grid. Values land in `{0, ±jump}`
/// and the discontinuity interfaces trace the step's preimages.
pub fn nilcycle_field_json(x: f64, t3: f64, jump: f64, at: f64, res: usize) -> String {
    let res = res.clamp(16, 512);
    let h = StepMap { jump, at };
    let mut values = Vec::with_capacity(res * res);
    for i in 0..res {
        for j in 0..res {
            let t1 = (j as f64 + 0.5) / res as f64;
            let t2 = (i as f64 + 0.5) / res as f64;
            // Alternating sum over the 8 vertices of the (t1,t2,t3)-cube.
            let mut acc = 0.0;
            for v in 0..8u32 {
                let mut c = frac(x);
                if v & 1 == 1 {
                    c += t1;
                }
                if v & 2 == 2 {
                    c += t2;
                }
                if v & 4 == 4 {
                    c += t3;
                }
                let sign = if v.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * h.eval_circle(frac(c));
            }
            // Signed representative in (-1/2, 1/2].
            let r = frac(acc);
            values.push(if r > 0.5 { r - 1.0 } else { r });
        }
    }
    serde_json::to_string(&NilcycleField { res, x: frac(x), t3: frac(t3), values })
        .unwrap_or_default()
}

#[wasm_bindgen]
pub fn gowers_curve(n: u32, kind: &str, param: i32, seed: u32) -> String {
    gowers_curve_json(n as u64, kind, param as i64, seed as u64)
}

#[wasm_bindgen]
pub fn average_trajectory(alpha: f64, x0: f64, xi1: i32, xi2: i32, n: u32) -> String {
    average_trajectory_json(alpha, x0, xi1 as i64, xi2 as i64, n as u64)
}

#[wasm_bindgen]
pub fn nilcycle_field(x: f64, t3: f64, jump: f64, at: f64, res: u32) -> String {
    nilcycle_field_json(x, t3, jump, at, res as usize)
}
