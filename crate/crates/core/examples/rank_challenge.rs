//! Re-rank the top five challenge teams from their published mean scores.

use wmhseg::metrics::{rank_teams, TeamSummary};

fn main() -> wmhseg::Result<()> {
    // mean scores on the two scanners held out from training
    let teams = [
        TeamSummary::new("sysu_media", 0.74, 11.0, 26.2, 0.87, 0.72),
        TeamSummary::new("nih_cidi_2", 0.70, 9.7, 21.9, 0.79, 0.68),
        TeamSummary::new("cain", 0.74, 14.1, 28.4, 0.82, 0.66),
        TeamSummary::new("nic-vicorob", 0.71, 13.5, 56.3, 0.81, 0.62),
        TeamSummary::new("nlp_logix", 0.68, 13.0, 27.9, 0.66, 0.73),
    ];
    let table = rank_teams(&teams)?;
    println!("{:<12} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8}", "team", "dice", "h95", "avd", "recall", "f1", "overall");
    for t in table.leaderboard() {
        println!(
            "{:<12} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>8.4}",
            t.team, t.dice, t.h95, t.avd, t.recall, t.f1, t.overall
        );
    }
    Ok(())
}
