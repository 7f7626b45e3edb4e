/// Classic fixed-step fourth-order Runge–Kutta with reusable scratch space.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, f: &mut F, t: f64, h: f64, x: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        f(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// Like [`Self::step`] but splits the interval at any breakpoint strictly
    /// inside `(t, t + h)` so non-smooth forcing is never straddled.
    pub fn step_split<F>(&mut self, f: &mut F, t: f64, h: f64, x: &mut [f64], breaks: &[f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let end = t + h;
        // relative guard against slivers created by rounding of t
        let eps = 1e-9 * h;
        let mut cur = t;
        for &b in breaks {
            if b > cur + eps && b < end - eps {
                self.step(f, cur, b - cur, x);
                cur = b;
            }
        }
        self.step(f, cur, end - cur, x);
    }
}
