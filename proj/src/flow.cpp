namespace hepta {
}
