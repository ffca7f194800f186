//! SVG snapshots of a world and its planned path.

use std::fmt::Write;

use crate::geometry::{ObstacleKind, Point2, PolygonWorld};
use crate::planner::PlanRecord;

const DYNAMIC_FILL: &str = "#222222";
const STATIC_FILL: &str = "#f28c28";
const PATH_FREE: &str = "#1f77b4";
const PATH_BLOCKED: &str = "#d62728";

/// Renders one frame. The y axis points up, as in map coordinates.
pub fn frame_svg(world: &PolygonWorld, record: Option<&PlanRecord>, frame: usize) -> String {
    let (w, h) = (world.width, world.height);
    let flip = |p: Point2| format!("{:.2},{:.2}", p.x, h - p.y);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hh}" viewBox="0 0 {w} {hh}">"#,
        hh = h + 24.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black"/>"#
    );
    for o in &world.obstacles {
        let fill = match o.kind {
            ObstacleKind::Dynamic => DYNAMIC_FILL,
            ObstacleKind::Static => STATIC_FILL,
        };
        let points: Vec<String> = o.vertices.iter().map(|p| flip(*p)).collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}"/>"#, points.join(" "));
    }
    if let Some(r) = record {
        let mut points = vec![flip(world.start)];
        points.extend(r.path.waypoints.iter().map(|p| flip(*p)));
        points.push(flip(world.target));
        let colour = if r.collision_free { PATH_FREE } else { PATH_BLOCKED };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for p in &r.path.waypoints {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{colour}"/>"#,
                p.x,
                h - p.y
            );
        }
    }
    for (p, colour) in [(world.start, "#2ca02c"), (world.target, "#9467bd")] {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{colour}"/>"#,
            p.x,
            h - p.y
        );
    }
    let caption = match record {
        Some(r) => format!(
            "frame {frame}  length {:.1} cm  iterations {}  collisions {}",
            r.length, r.iterations, r.collisions
        ),
        None => format!("frame {frame}"),
    };
    let _ = writeln!(
        out,
        r#"<text x="4" y="{:.0}" font-family="monospace" font-size="12">{caption}</text>"#,
        h + 17.0
    );
    out.push_str("</svg>\n");
    out
}
