use usermap_wasm::Demo;

#[test]
fn map_profile_and_ranking_round_trip() {
    let mut demo = Demo::new(3, 20, 0.1, 7).unwrap();
    let points = demo.points().to_vec();
    assert_eq!(points.len(), 60);
    assert!(points
        .iter()
        .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
    assert!(points.iter().all(|p| p.community < 3 && p.posts >= 5));

    let profile = demo.profile(&points[0].id, 8).unwrap();
    assert!(!profile.is_empty() && profile.len() <= 8);
    assert!(demo.profile("nobody", 8).is_err());

    assert!(demo.rank().is_err(), "one class is not enough");
    let same: Vec<&str> = points
        .iter()
        .filter(|p| p.community == points[0].community)
        .map(|p| p.id.as_str())
        .collect();
    let other: Vec<&str> = points
        .iter()
        .filter(|p| p.community != points[0].community)
        .map(|p| p.id.as_str())
        .collect();
    for u in &same[..3] {
        demo.judge(u, true).unwrap();
    }
    for u in &other[..3] {
        demo.judge(u, false).unwrap();
    }
    assert!(demo.judge("nobody", true).is_err());
    assert_eq!(demo.judged().len(), 6);

    let ranking = demo.rank().unwrap();
    assert_eq!(ranking.round, 1);
    assert_eq!(ranking.top.len(), 10);
    assert_eq!(ranking.scores.len(), 60);
    let hits = ranking
        .top
        .iter()
        .filter(|u| same.contains(&u.as_str()))
        .count();
    assert!(
        hits >= 8,
        "{hits} of 10 suggestions share the labelled community"
    );

    demo.reset().unwrap();
    assert!(demo.judged().is_empty());
    assert!(demo.rank().is_err());
}
