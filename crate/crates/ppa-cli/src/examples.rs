//! Ready-to-run problem files printed by `ppa example`.

pub const NAMES: [&str; 8] = ["eg1", "eg2", "eg3", "l1x", "l1y", "drs-lasso", "alm-basic", "admm-basic"];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "eg1" => EG1,
        "eg2" => EG2,
        "eg3" => EG3,
        "l1x" => L1X,
        "l1y" => L1Y,
        "drs-lasso" => DRS_LASSO,
        "alm-basic" => ALM_BASIC,
        "admm-basic" => ADMM_BASIC,
        _ => return None,
    })
}

const EG1: &str = r#"# A = d|x| in the first coordinate, Q measures only the second.
name = "eg1"
algorithm = "ppa"
x0 = [1.0, 2.0]

[operator]
kind = "builtin"
name = "eg1"

[metric]
diagonal = [0.0, 1.0]
"#;

const EG2: &str = r#"# A = d f with f(x, y) = max(e^y - x, 0) and Q = diag(1, 0).
# The resolvent is empty at (x, 0) for x <= -1, so this run stops at once.
name = "eg2"
algorithm = "ppa"
x0 = [-2.0, 0.0]

[operator]
kind = "builtin"
name = "eg2"

[metric]
diagonal = [1.0, 0.0]
"#;

const EG3: &str = r#"# The same f as eg2, with Q = diag(0, 1).
# T x is never empty here, but its range part is not unique, so `run`
# stops at once; the range and sri checks are the interesting part.
name = "eg3"
algorithm = "ppa"
x0 = [1.0, 0.5]

[operator]
kind = "builtin"
name = "eg3"

[metric]
diagonal = [0.0, 1.0]
"#;

const L1X: &str = r#"# d|x_1| with Q = diag(1, 0): the second coordinate of T x is free.
name = "l1x"
algorithm = "ppa"
x0 = [3.0, 0.0]
zeros = [[0.0, 0.0], [0.0, 4.0], [0.0, -7.5]]

[operator]
kind = "builtin"
name = "l1x"

[metric]
diagonal = [1.0, 0.0]
"#;

const L1Y: &str = r#"# d|x_1| with Q = diag(0, 1): T x = (0, x_2).
name = "l1y"
algorithm = "ppa"
x0 = [0.0, 3.0]
zeros = [[0.0, 0.0], [0.0, 3.0]]

[operator]
kind = "builtin"
name = "l1y"

[metric]
diagonal = [0.0, 1.0]
"#;

const DRS_LASSO: &str = r#"# min |u| + (1/2)(u - 3)^2 by Douglas-Rachford; the solution is u = 2.
# State is (u, w, z).
name = "drs-lasso"
algorithm = "drs"
tau = 1.0
x0 = [0.0, 0.0, 0.0]
seed = 7
zeros = [[2.0, 2.0, 1.0]]

[f]
kind = "abs"
weight = 1.0

[g]
kind = "shifted-square"
scale = 1.0
shift = [3.0]

[stop]
max_iters = 500
q_res_tol = 1e-12
"#;

const ALM_BASIC: &str = r#"# min (1/2) q^2 subject to q = 2 by the augmented Lagrangian method.
# State is (q, p).
name = "alm-basic"
algorithm = "alm"
tau = 1.0
x0 = [0.0, 0.0]
zeros = [[2.0, 2.0]]

[f]
kind = "half-square"
dim = 1

[constraint]
rhs = [2.0]

[stop]
max_iters = 1000
q_res_tol = 1e-12
"#;

const ADMM_BASIC: &str = r#"# min (1/2)(s - 3)^2 + |t| subject to s - t = 0; the solution is s = t = 2.
# State is (s, t, u).
name = "admm-basic"
algorithm = "admm"
tau = 1.0
x0 = [0.0, 0.0, 0.0]

[f]
kind = "shifted-square"
scale = 1.0
shift = [3.0]

[g]
kind = "abs"

[constraint]
a = [[1.0]]
b = [[-1.0]]

[stop]
max_iters = 1000
q_res_tol = 1e-12
"#;
