//! Deterministic text output: fixed-format floats, CSV assembly, and a
//! dependency-free SVG writer for the variety plot.

use biocontrol::linalg::Complex64;

/// Scientific notation with ten significant digits and a signed two-digit
/// exponent: the byte-stable interchange format of every CSV column.
pub fn g10(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.9e}", x);
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let e: i32 = exp.parse().expect("exponent value");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// Complex value as `a+bi` / `a-bi` in the same fixed format.
pub fn g10c(z: Complex64) -> String {
    let im = g10(z.im.abs());
    format!("{}{}{}i", g10(z.re), if z.im < 0.0 { '-' } else { '+' }, im)
}

/// Minimal SVG plot of the admissible wedge and the traced variety:
/// axes, the diagonal `k2 = k1`, the `k1` upper bound, and the curve.
pub fn sigma_svg(points: &[(f64, f64)], k1_max: f64, c2: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 520.0;
    const ML: f64 = 70.0;
    const MR: f64 = 25.0;
    const MT: f64 = 30.0;
    const MB: f64 = 55.0;
    let span = k1_max * 1.05;
    let px = |k1: f64| ML + (W - ML - MR) * (k1 / span);
    let py = |k2: f64| H - MB - (H - MT - MB) * (k2 / span);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(0.0),
        py(0.0),
        px(span),
        py(0.0)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(0.0),
        py(0.0),
        px(0.0),
        py(span)
    ));
    // admissible wedge boundary: diagonal and the k1 upper bound
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" \
         stroke-dasharray=\"6 3\"/>\n",
        px(0.0),
        py(0.0),
        px(k1_max),
        py(k1_max)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" \
         stroke-dasharray=\"2 3\"/>\n",
        px(k1_max),
        py(0.0),
        px(k1_max),
        py(k1_max)
    ));
    if !points.is_empty() {
        let path: Vec<String> = points
            .iter()
            .map(|&(k1, k2)| format!("{:.2},{:.2}", px(k1), py(k2)))
            .collect();
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"13\">k1</text>\n",
        W - MR - 18.0,
        H - MB + 32.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"13\">k2</text>\n",
        ML - 45.0,
        MT + 8.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"13\">c2 = {}</text>\n",
        ML + 8.0,
        MT + 2.0,
        c2
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_format_examples() {
        assert_eq!(g10(123.456), "1.234560000e+02");
        assert_eq!(g10(-0.001), "-1.000000000e-03");
        assert_eq!(g10(0.0), "0.000000000e+00");
        assert_eq!(g10(3.81697e-12), "3.816970000e-12");
        assert_eq!(g10(1e100), "1.000000000e+100");
    }

    #[test]
    fn complex_format() {
        assert_eq!(
            g10c(Complex64::new(1.0, -2.0)),
            "1.000000000e+00-2.000000000e+00i"
        );
    }

    #[test]
    fn svg_contains_curve_and_axes() {
        let svg = sigma_svg(&[(0.001, 0.0005), (0.002, 0.0004)], 0.022, 100.0);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
