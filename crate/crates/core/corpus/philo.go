package main

import (
	"fmt"
	"time"
)

func philo(id int, forks chan int) {
	for {
		<-forks
		<-forks
		fmt.Printf("%d eats\n", id)
		time.Sleep(1 * 1e9)
		forks <- 1
		forks <- 1
		time.Sleep(1 * 1e9)
	}
}

func main() {
	forks := make(chan int)
	go func() {
		forks <- 1
	}()
	go func() {
		forks <- 1
	}()
	go philo(1, forks)
	philo(2, forks)
}
