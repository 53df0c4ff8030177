//! Service-statistics export: recount generated/served users from a
//! trajectory dump, render the per-class table, and cross-check against
//! the run's own tally.

use std::path::Path;

use anyhow::{bail, Context, Result};
use skyslice::config::UserClass;

use crate::runner::UserServiceStats;

fn class_from_label(label: &str) -> Option<UserClass> {
    match label {
        "A" => Some(UserClass::A),
        "B" => Some(UserClass::B),
        "C" => Some(UserClass::C),
        _ => None,
    }
}

/// Independent recount over `trajectory.jsonl`: a user counts as served
/// when any step of its episode lists it in some drone's served set.
pub fn recount_from_trajectory(path: &Path) -> Result<UserServiceStats> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut stats = UserServiceStats::default();
    // Class of each user in the current episode, then which ids were
    // served at least once.
    let mut classes: Vec<UserClass> = Vec::new();
    let mut served: Vec<bool> = Vec::new();
    let flush = |classes: &[UserClass], served: &[bool], stats: &mut UserServiceStats| {
        for (class, was_served) in classes.iter().zip(served) {
            stats.generated[class.priority()] += 1;
            if *was_served {
                stats.served_at_least_once[class.priority()] += 1;
            }
        }
    };
    for (line_no, line) in text.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("trajectory line {}", line_no + 1))?;
        match v["kind"].as_str() {
            Some("episode_start") => {
                flush(&classes, &served, &mut stats);
                let users = v["users"].as_array().context("episode_start without users")?;
                classes = users
                    .iter()
                    .map(|u| {
                        class_from_label(u["class"].as_str().unwrap_or("?"))
                            .context("unknown user class in trajectory")
                    })
                    .collect::<Result<_>>()?;
                served = vec![false; classes.len()];
            }
            Some("step") => {
                let per_drone = v["served"].as_array().context("step without served sets")?;
                for drone_list in per_drone {
                    for uid in drone_list.as_array().context("served set not a list")? {
                        let id = uid.as_u64().context("user id not an integer")? as usize;
                        if id < served.len() {
                            served[id] = true;
                        }
                    }
                }
            }
            _ => bail!("trajectory line {} has unknown kind", line_no + 1),
        }
    }
    flush(&classes, &served, &mut stats);
    Ok(stats)
}

/// Recount a seed directory's trajectory, write `user_stats.json`, and
/// return the rendered table. Errors if the run was made without
/// `--dump-trajectory`.
pub fn export_user_statistics(seed_dir: &Path) -> Result<(UserServiceStats, String)> {
    let trajectory = seed_dir.join("trajectory.jsonl");
    if !trajectory.exists() {
        bail!(
            "{} not found — re-run training with --dump-trajectory",
            trajectory.display()
        );
    }
    let stats = recount_from_trajectory(&trajectory)?;
    std::fs::write(
        seed_dir.join("user_stats.json"),
        serde_json::to_string_pretty(&crate::runner::user_stats_json(&stats))?,
    )?;
    let mut table = stats.render_table();

    // Cross-check against the tally the run itself recorded.
    let stats_path = seed_dir.join("stats.json");
    if stats_path.exists() {
        let recorded: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&stats_path)?)?;
        let mut consistent = true;
        for class in UserClass::ALL {
            let idx = class.priority();
            let gen = recorded["user_stats"][class.label()]["generated"].as_u64();
            let srv = recorded["user_stats"][class.label()]["served_at_least_once"].as_u64();
            if gen != Some(stats.generated[idx]) || srv != Some(stats.served_at_least_once[idx]) {
                consistent = false;
            }
        }
        table.push_str(if consistent {
            "\nrecount matches stats.json\n"
        } else {
            "\nWARNING: recount disagrees with stats.json\n"
        });
        if !consistent {
            bail!("trajectory recount disagrees with stats.json:\n{table}");
        }
    }
    Ok((stats, table))
}
