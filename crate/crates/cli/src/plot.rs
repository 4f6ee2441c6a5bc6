//! Top-down SVG of one episode: walls, reference path (green), executed
//! path (blue), chosen waypoints, start and goal.

use std::fmt::Write;

use skelnav::geom::Point2;
use skelnav::regulator::EpisodeRecord;
use skelnav::simenv::SimWorld;
use skelnav::waypoint::Waypoint;

/// Pixels per metre.
const SCALE: f64 = 40.0;

fn polyline(out: &mut String, pts: &[(f64, f64)], stroke: &str, width: f64, class: &str) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="{width}" stroke-linejoin="round"/>"#,
        coords.join(" ")
    );
}

pub fn render_svg(world: &SimWorld, rec: &EpisodeRecord) -> String {
    let ext = world.extent();
    let (w, h) = (ext.x * SCALE, ext.y * SCALE);
    let px = |p: Point2| (p.x * SCALE, (ext.y - p.y) * SCALE);
    let cs = world.cell_size() * SCALE;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&rec.header.episode_id));
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    // Walls as one rect per horizontal run of occupied cells.
    s.push_str(r##"<g class="walls" fill="#444444">"##);
    s.push('\n');
    for r in 0..world.height() {
        let mut c = 0;
        while c < world.width() {
            if !world.is_occupied_cell(r, c) {
                c += 1;
                continue;
            }
            let start = c;
            while c < world.width() && world.is_occupied_cell(r, c) {
                c += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{cs:.1}"/>"#,
                start as f64 * cs,
                r as f64 * cs,
                (c - start) as f64 * cs
            );
        }
    }
    s.push_str("</g>\n");

    let reference: Vec<_> = rec.header.reference_path.iter().map(|&p| px(p)).collect();
    if reference.len() > 1 {
        polyline(&mut s, &reference, "#2ca02c", 3.0, "reference");
    }
    let executed: Vec<_> = rec.positions().into_iter().map(px).collect();
    if executed.len() > 1 {
        polyline(&mut s, &executed, "#1f77b4", 2.0, "executed");
    }

    let mut pose = rec.header.start;
    for step in &rec.steps {
        if let Some(e) = step.decision_space.iter().find(|e| e.id == step.chosen_id) {
            let wp = Waypoint::from_polar(e.id, e.distance_m, e.heading_deg).world_position(&pose);
            let (x, y) = px(wp);
            let _ = writeln!(
                s,
                r##"<circle class="waypoint" cx="{x:.1}" cy="{y:.1}" r="3" fill="#ff7f0e"><title>t={}</title></circle>"##,
                step.t
            );
        }
        pose = step.final_pose();
    }

    let (sx, sy) = px(rec.header.start.position());
    let _ = writeln!(s, r##"<circle class="start" cx="{sx:.1}" cy="{sy:.1}" r="6" fill="#1f77b4"/>"##);
    let (gx, gy) = px(rec.header.goal);
    let _ = writeln!(
        s,
        r##"<rect class="goal" x="{:.1}" y="{:.1}" width="12" height="12" fill="#d62728"/>"##,
        gx - 6.0,
        gy - 6.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
