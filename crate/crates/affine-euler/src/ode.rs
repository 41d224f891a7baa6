//! Dormand–Prince 8(5) embedded Runge–Kutta integrator on fixed-size states.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("state rejected by validator at t = {t} after repeated step reduction")]
    InvalidState { t: f64, last_good: Vec<f64> },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, last_good: Vec<f64> },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, last_good: Vec<f64> },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510;
const C5: f64 = 0.281649658092772603273242802490;
const C6: f64 = 0.333333333333333333333333333333;
const C7: f64 = 0.25;
const C8: f64 = 0.307692307692307692307692307692;
const C9: f64 = 0.651282051282051282051282051282;
const C10: f64 = 0.6;
const C11: f64 = 0.857142857142857142857142857142;

const A21: f64 = 5.26001519587677318785587544488e-02;
const A31: f64 = 1.97250569845378994544595329183e-02;
const A32: f64 = 5.91751709536136983633785987549e-02;
const A41: f64 = 2.95875854768068491816892993775e-02;
const A43: f64 = 8.87627564304205475450678981324e-02;
const A51: f64 = 2.41365134159266685502369798665e-01;
const A53: f64 = -8.84549479328286085344864962717e-01;
const A54: f64 = 9.24834003261792003115737966543e-01;
const A61: f64 = 3.70370370370370370370370370370e-02;
const A64: f64 = 1.70828608729473871279604482173e-01;
const A65: f64 = 1.25467687566822425016691814123e-01;
const A71: f64 = 3.71093750000000000000000000000e-02;
const A74: f64 = 1.70252211019544039314978060272e-01;
const A75: f64 = 6.02165389804559606850219397283e-02;
const A76: f64 = -1.75781250000000000000000000000e-02;
const A81: f64 = 3.70920001185047927108779319836e-02;
const A84: f64 = 1.70383925712239993810214054705e-01;
const A85: f64 = 1.07262030446373284651809199168e-01;
const A86: f64 = -1.53194377486244017527936158236e-02;
const A87: f64 = 8.27378916381402288758473766002e-03;
const A91: f64 = 6.24110958716075717114429577812e-01;
const A94: f64 = -3.36089262944694129406857109825e+00;
const A95: f64 = -8.68219346841726006818189891453e-01;
const A96: f64 = 2.75920996994467083049415600797e+01;
const A97: f64 = 2.01540675504778934086186788979e+01;
const A98: f64 = -4.34898841810699588477366255144e+01;
const A101: f64 = 4.77662536438264365890433908527e-01;
const A104: f64 = -2.48811461997166764192642586468e+00;
const A105: f64 = -5.90290826836842996371446475743e-01;
const A106: f64 = 2.12300514481811942347288949897e+01;
const A107: f64 = 1.52792336328824235832596922938e+01;
const A108: f64 = -3.32882109689848629194453265587e+01;
const A109: f64 = -2.03312017085086261358222928593e-02;
const A111: f64 = -9.3714243008598732571704021658e-01;
const A114: f64 = 5.18637242884406370830023853209e+00;
const A115: f64 = 1.09143734899672957818500254654e+00;
const A116: f64 = -8.14978701074692612513997267357e+00;
const A117: f64 = -1.85200656599969598641566180701e+01;
const A118: f64 = 2.27394870993505042818970056734e+01;
const A119: f64 = 2.49360555267965238987089396762e+00;
const A1110: f64 = -3.0467644718982195003823669022e+00;
const A121: f64 = 2.27331014751653820792359768449e+00;
const A124: f64 = -1.05344954667372501984066689879e+01;
const A125: f64 = -2.00087205822486249909675718444e+00;
const A126: f64 = -1.79589318631187989172765950534e+01;
const A127: f64 = 2.79488845294199600508499808837e+01;
const A128: f64 = -2.85899827713502369474065508674e+00;
const A129: f64 = -8.87285693353062954433549289258e+00;
const A1210: f64 = 1.23605671757943030647266201528e+01;
const A1211: f64 = 6.43392746015763530355970484046e-01;

const B1: f64 = 5.42937341165687622380535766363e-02;
const B6: f64 = 4.45031289275240888144113950566e+00;
const B7: f64 = 1.89151789931450038304281599044e+00;
const B8: f64 = -5.80120396001058478146721142270e+00;
const B9: f64 = 3.1116436695781989440891606237e-01;
const B10: f64 = -1.52160949662516078556178806805e-01;
const B11: f64 = 2.01365400804030348374776537501e-01;
const B12: f64 = 4.47106157277725905176885569043e-02;

const E1: f64 = 0.1312004499419488073250102996e-01;
const E6: f64 = -0.1225156446376204440720569753e+01;
const E7: f64 = -0.4957589496572501915214079952e+00;
const E8: f64 = 0.1664377182454986536961530415e+01;
const E9: f64 = -0.3503288487499736816886487290e+00;
const E10: f64 = 0.3341791187130174790297318841e+00;
const E11: f64 = 0.8192320648511571246570742613e-01;
const E12: f64 = -0.2235530786388629525884427845e-01;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const MAX_VALIDATION_SHRINKS: usize = 30;

#[inline]
fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
///
/// `validate` may reject an accepted state (the step is then retried with half the size);
/// `observe` is called with every accepted `(t, y)` including the initial point.
pub fn dop853<const N: usize, F, V, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut validate: V,
    mut observe: O,
) -> Result<OdeStats, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    V: FnMut(&[f64; N]) -> bool,
    O: FnMut(f64, &[f64; N]),
{
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0;
    observe(t, &y);
    if t_end <= t0 {
        return Ok(stats);
    }
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&mut f, t, &y, &k1, opts));
    h = h.min(opts.h_max).min(t_end - t);
    let mut shrinks = 0usize;
    let mut validation_failed = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            if validation_failed {
                return Err(OdeError::InvalidState { t, last_good: y.to_vec() });
            }
            return Err(OdeError::StepUnderflow { t, last_good: y.to_vec() });
        }

        let k2 = f(t + C2 * h, &combo(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combo(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &combo(&y, h, &[(A41, &k1), (A43, &k3)]));
        let k5 = f(t + C5 * h, &combo(&y, h, &[(A51, &k1), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + C6 * h, &combo(&y, h, &[(A61, &k1), (A64, &k4), (A65, &k5)]));
        let k7 = f(t + C7 * h, &combo(&y, h, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
        let k8 = f(
            t + C8 * h,
            &combo(&y, h, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
        );
        let k9 = f(
            t + C9 * h,
            &combo(&y, h, &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
        );
        let k10 = f(
            t + C10 * h,
            &combo(
                &y,
                h,
                &[(A101, &k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)],
            ),
        );
        let k11 = f(
            t + C11 * h,
            &combo(
                &y,
                h,
                &[
                    (A111, &k1),
                    (A114, &k4),
                    (A115, &k5),
                    (A116, &k6),
                    (A117, &k7),
                    (A118, &k8),
                    (A119, &k9),
                    (A1110, &k10),
                ],
            ),
        );
        let k12 = f(
            t + h,
            &combo(
                &y,
                h,
                &[
                    (A121, &k1),
                    (A124, &k4),
                    (A125, &k5),
                    (A126, &k6),
                    (A127, &k7),
                    (A128, &k8),
                    (A129, &k9),
                    (A1210, &k10),
                    (A1211, &k11),
                ],
            ),
        );
        stats.evaluations += 11;

        let y_new = combo(
            &y,
            h,
            &[(B1, &k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)],
        );
        let mut err2 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i]
                    + E6 * k6[i]
                    + E7 * k7[i]
                    + E8 * k8[i]
                    + E9 * k9[i]
                    + E10 * k10[i]
                    + E11 * k11[i]
                    + E12 * k12[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / N as f64).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            shrinks += 1;
            if shrinks > MAX_VALIDATION_SHRINKS {
                return Err(OdeError::NonFinite { t, last_good: y.to_vec() });
            }
            h *= 0.25;
            stats.rejected += 1;
            continue;
        }

        if err <= 1.0 {
            if !validate(&y_new) {
                validation_failed = true;
                shrinks += 1;
                if shrinks > MAX_VALIDATION_SHRINKS {
                    return Err(OdeError::InvalidState { t: t + h, last_good: y.to_vec() });
                }
                h *= 0.5;
                stats.rejected += 1;
                continue;
            }
            shrinks = 0;
            t = if last_step { t_end } else { t + h };
            y = y_new;
            k1 = f(t, &y);
            stats.evaluations += 1;
            stats.accepted += 1;
            observe(t, &y);
            let fac = if err == 0.0 { FAC_MAX } else { (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, FAC_MAX) };
            h = (h * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, 1.0);
            h *= fac;
        }
    }
    Ok(stats)
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = combo(y, h0, &[(1.0, k1)]);
    let k2 = f(t + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d2 += ((k2[i] - k1[i]) / sc).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 8.0) };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut last = [0.0; 1];
        let stats = dop853(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            &OdeOptions::with_tol(1e-12),
            |_| true,
            |_, y| last = *y,
        )
        .unwrap();
        assert!((last[0] - (-5.0f64).exp()).abs() < 1e-12);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let mut last = [0.0; 2];
        dop853(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &OdeOptions::with_tol(1e-11),
            |_| true,
            |_, y| last = *y,
        )
        .unwrap();
        assert!((last[0] - 10f64.cos()).abs() < 1e-9);
        assert!((last[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn validator_failure_is_reported() {
        let r = dop853(
            |_, _y: &[f64; 1]| [-1.0],
            0.0,
            [1.0],
            3.0,
            &OdeOptions::with_tol(1e-8),
            |y| y[0] > 0.0,
            |_, _| {},
        );
        assert!(matches!(r, Err(OdeError::InvalidState { .. })));
    }
}
