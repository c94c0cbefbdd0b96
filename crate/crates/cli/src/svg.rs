//! Minimal SVG rendering of plane chains and mapped boundaries.

use qcball_core::quasiball::BallChain;

/// Render the chain's circles, its union boundary samples, the mapped
/// boundary samples, and the unit circle for reference.
pub fn render(
    chain: &BallChain,
    source_boundary: &[Vec<f64>],
    image_boundary: Option<&[Vec<f64>]>,
) -> String {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut grow = |x: f64, y: f64| {
        min[0] = min[0].min(x);
        min[1] = min[1].min(y);
        max[0] = max[0].max(x);
        max[1] = max[1].max(y);
    };
    for b in &chain.balls {
        grow(b.center[0] - b.radius, b.center[1] - b.radius);
        grow(b.center[0] + b.radius, b.center[1] + b.radius);
    }
    grow(-1.1, -1.1);
    grow(1.1, 1.1);
    let pad = 0.05 * (max[0] - min[0]).max(max[1] - min[1]);
    let (x0, y0) = (min[0] - pad, min[1] - pad);
    let side = (max[0] - min[0]).max(max[1] - min[1]) + 2.0 * pad;
    let scale = 800.0 / side;
    let px = |x: f64| (x - x0) * scale;
    // Flip the y axis so the picture is in the usual orientation.
    let py = |y: f64| 800.0 - (y - y0) * scale;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n\
         <rect width=\"800\" height=\"800\" fill=\"white\"/>\n"
    ));
    // Unit circle reference.
    svg.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n",
        px(0.0),
        py(0.0),
        scale
    ));
    for b in &chain.balls {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"1.5\"/>\n",
            px(b.center[0]),
            py(b.center[1]),
            b.radius * scale
        ));
    }
    for p in source_boundary {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"#3366cc\"/>\n",
            px(p[0]),
            py(p[1])
        ));
    }
    if let Some(image) = image_boundary {
        for p in image {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"#cc3333\"/>\n",
                px(p[0]),
                py(p[1])
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}
