#[path = "../examples/api_walkthrough.rs"]
mod api_walkthrough;

#[tokio::test]
async fn api_walkthrough_decides_for_reese() {
    let view = api_walkthrough::run().await;
    assert_eq!(view["case"]["state"], "Decided");
    let accepted = view["case"]["decision"]["Accepted"].clone();
    let offer = view["case"]["offers"].as_array().unwrap().iter().find(|o| o["offer_id"] == accepted).unwrap();
    assert_eq!(offer["provider_id"], "reese");
}
