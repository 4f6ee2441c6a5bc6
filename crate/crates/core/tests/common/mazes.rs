//! Hand-authored maze fixtures. Each character is a 0.5 m block: `#` and space are wall,
//! `S` start (defaults to the goal), `G` goal, `a`..`h` ordered subtask targets, anything else free.

use skelnav::geom::{Point2, Pose};
use skelnav::simenv::{EpisodeSpec, SimWorld};

pub const BLOCK: f64 = 0.5;
pub const CELL: f64 = 0.05;

pub struct Maze {
    pub name: &'static str,
    pub world: SimWorld,
    pub episode: EpisodeSpec,
}

struct Fixture {
    name: &'static str,
    yaw: f64,
    /// Instruction clauses; their count sets the step budget.
    clauses: usize,
    rows: &'static [&'static str],
}

fn block_centre(rows: &[&str], ch: char) -> Option<Point2> {
    let h = rows.len();
    rows.iter().enumerate().find_map(|(r, line)| {
        line.chars().position(|c| c == ch).map(|c| {
            Point2::new((c as f64 + 0.5) * BLOCK, ((h - r) as f64 - 0.5) * BLOCK)
        })
    })
}

pub fn build(rows: &[&str]) -> SimWorld {
    let k = (BLOCK / CELL).round() as usize;
    let h = rows.len();
    let w = rows.iter().map(|r| r.len()).max().unwrap();
    let mut occ = vec![true; w * k * h * k];
    for (r, line) in rows.iter().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            if ch != '#' && ch != ' ' {
                for dr in 0..k {
                    for dc in 0..k {
                        occ[(r * k + dr) * w * k + c * k + dc] = false;
                    }
                }
            }
        }
    }
    SimWorld::new(w * k, h * k, CELL, occ).unwrap()
}

fn make(f: &Fixture) -> Maze {
    let world = build(f.rows);
    let goal = block_centre(f.rows, 'G').expect("goal");
    // No `S` means the episode starts on the goal.
    let start = block_centre(f.rows, 'S').unwrap_or(goal);
    let mut hints: Vec<Point2> = ('a'..='h').filter_map(|c| block_centre(f.rows, c)).collect();
    let mut reference = vec![start];
    reference.extend(hints.iter().copied());
    reference.push(goal);
    hints.push(goal);
    let clauses: Vec<String> = (1..=f.clauses)
        .map(|i| format!("Follow the passage to waypoint {i}."))
        .collect();
    Maze {
        name: f.name,
        world,
        episode: EpisodeSpec {
            id: f.name.to_string(),
            start: Pose::new(start.x, start.y, f.yaw),
            goal,
            instruction: clauses.join(" "),
            subtask_hints: hints,
            reference_path: reference,
        },
    }
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "straight",
        yaw: 0.0,
        clauses: 1,
        rows: &[
            "######################",
            "#....................#",
            "#..S..............G..#",
            "#....................#",
            "######################",
        ],
    },
    Fixture {
        name: "l_turn",
        yaw: 0.0,
        clauses: 2,
        rows: &[
            "##############",
            "#.........G..#",
            "#............#",
            "#............#",
            "#.....########",
            "#.....#",
            "#.....#",
            "#..a..#",
            "#.....#",
            "#.....#",
            "#.S...#",
            "#.....#",
            "#######",
        ],
    },
    Fixture {
        name: "u_turn",
        yaw: 90.0,
        clauses: 3,
        rows: &[
            "################",
            "#..............#",
            "#..............#",
            "#..............#",
            "#....######....#",
            "#....#    #....#",
            "#....#    #....#",
            "#....#    #....#",
            "#..S.#    #..G.#",
            "#....#    #....#",
            "######    ######",
        ],
    },
    Fixture {
        name: "z_bend",
        yaw: 0.0,
        clauses: 3,
        rows: &[
            "##########",
            "#S.....a.#",
            "#........#",
            "#........#",
            "######...#",
            "     #...#",
            "######...#",
            "#...b....#",
            "#........#",
            "#........#",
            "#...######",
            "#...#",
            "#.G.#",
            "#...#",
            "#####",
        ],
    },
    Fixture {
        name: "t_junction_left",
        yaw: 90.0,
        clauses: 2,
        rows: &[
            "#################",
            "#.G.............#",
            "#...............#",
            "#...............#",
            "######.....######",
            "     #..S..#",
            "     #.....#",
            "     #.....#",
            "     #######",
        ],
    },
    Fixture {
        name: "t_junction_right",
        yaw: 90.0,
        clauses: 2,
        rows: &[
            "#####################",
            "#.................G.#",
            "#..........a........#",
            "#...................#",
            "########.....########",
            "       #.....#",
            "       #.....#",
            "       #..S..#",
            "       #.....#",
            "       #######",
        ],
    },
    Fixture {
        name: "two_rooms",
        yaw: 0.0,
        clauses: 2,
        rows: &[
            "#################",
            "#......#........#",
            "#......#........#",
            "#..S.......a..G.#",
            "#..............##",
            "#......#........#",
            "#......#........#",
            "#################",
        ],
    },
    Fixture {
        name: "room_door_side",
        yaw: 0.0,
        clauses: 3,
        rows: &[
            "##############",
            "#............#",
            "#.S..........#",
            "#............#",
            "#########..###",
            "#............#",
            "#............#",
            "#.G..........#",
            "##############",
        ],
    },
    Fixture {
        name: "spiral_in",
        yaw: 0.0,
        clauses: 5,
        rows: &[
            "##################",
            "#S...............#",
            "#................#",
            "#................#",
            "#.........####...#",
            "#...#.....#G.....#",
            "#...#.....#......#",
            "#...#............#",
            "#...##########...#",
            "#................#",
            "##################",
        ],
    },
    Fixture {
        name: "around_pillar",
        yaw: 0.0,
        clauses: 2,
        rows: &[
            "##################",
            "#................#",
            "#.......a........#",
            "#................#",
            "#...##########...#",
            "#S..##########..G#",
            "#...##########...#",
            "#................#",
            "#................#",
            "##################",
        ],
    },
    Fixture {
        name: "long_hall",
        yaw: 0.0,
        clauses: 6,
        rows: &[
            "##############################",
            "#............................#",
            "#.S.......................G..#",
            "#............................#",
            "##############################",
        ],
    },
    Fixture {
        name: "s_curve",
        yaw: 0.0,
        clauses: 8,
        rows: &[
            "####################",
            "#.S................#",
            "#..................#",
            "#..................#",
            "###############....#",
            "#..................#",
            "#..................#",
            "#..................#",
            "#....###############",
            "#..................#",
            "#..................#",
            "#..............G...#",
            "####################",
        ],
    },
    Fixture {
        name: "dead_end_branch",
        yaw: 0.0,
        clauses: 2,
        rows: &[
            "####################",
            "#..................#",
            "#.S................#",
            "#..................#",
            "#########....#######",
            "        #....#",
            "        #....#",
            "        #.G..#",
            "        #....#",
            "        ######",
        ],
    },
    Fixture {
        name: "cross_hub",
        yaw: 0.0,
        clauses: 3,
        rows: &[
            "       ######",
            "       #....#",
            "       #.G..#",
            "       #....#",
            "       #....#",
            "########....#######",
            "#S.......a........#",
            "#.................#",
            "#.................#",
            "########....#######",
            "       #....#",
            "       #....#",
            "       ######",
        ],
    },
    Fixture {
        name: "doorway_chain",
        yaw: 0.0,
        clauses: 3,
        rows: &[
            "##############################",
            "#......#.......#.............#",
            "#......#.......#.............#",
            "#.S.......................G..#",
            "#............................#",
            "#......#.......#######.......#",
            "#......#.......#     #.......#",
            "##############################",
        ],
    },
    Fixture {
        name: "goal_at_start",
        yaw: 0.0,
        clauses: 1,
        rows: &[
            "##########",
            "#........#",
            "#........#",
            "#...G....#",
            "#........#",
            "#........#",
            "##########",
        ],
    },
    Fixture {
        name: "wide_open",
        yaw: 45.0,
        clauses: 2,
        rows: &[
            "########################",
            "#......................#",
            "#...................G..#",
            "#......................#",
            "#......................#",
            "#......................#",
            "#......................#",
            "#......................#",
            "#......................#",
            "#..S...................#",
            "#......................#",
            "########################",
        ],
    },
    Fixture {
        name: "narrow_bend",
        yaw: 0.0,
        clauses: 3,
        rows: &[
            "#############",
            "#S.........a#",
            "#...........#",
            "#########...#",
            "        #...#",
            "        #...#",
            "        #...#",
            "#########...#",
            "#G..........#",
            "#...........#",
            "#############",
        ],
    },
    Fixture {
        name: "behind_start",
        yaw: 0.0,
        clauses: 2,
        rows: &[
            "####################",
            "#..................#",
            "#.G.............S..#",
            "#..................#",
            "####################",
        ],
    },
    Fixture {
        name: "offset_rooms",
        yaw: 90.0,
        clauses: 4,
        rows: &[
            "###############",
            "#........#....#",
            "#..G.....#....#",
            "#........#....#",
            "#.............#",
            "#........#....#",
            "#######..#....#",
            "#........#....#",
            "#..S..........#",
            "#........#....#",
            "###############",
        ],
    },
];

pub fn mazes() -> Vec<Maze> {
    FIXTURES.iter().map(make).collect()
}
